"""Command-line front end.

Subcommands: ``solve`` (one retarder solution with stage voltages),
``calibrate`` (sweep a simulated cell and emit its constants),
``ratecheck`` (driver switching-rate table), ``simulate`` (closed-loop run
emitting JSONL frames), and ``serve`` (HTTP observation/command service).

Exit codes: 0 on success, 2 on usage or validation problems, 3 on domain
errors (a request the hardware range cannot satisfy, an unconvergent
calibration).  A config file may be named with ``--config`` or the
POLCONTROL_CONFIG environment variable; explicit flags win over config
values.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from .core import solve_retarder
from .driver import PROFILES, get_profile, rate_table
from .errors import (
    ConfigInvalid,
    PolControlError,
    Unsatisfiable,
    UnknownProfile,
    VoltageRangeExceeded,
)
from .loop import Event, LoopConfig, event_from_dict, run
from .pcm import (
    DEFAULT_CALIBRATION,
    PcmStagePlant,
    SweepConfig,
    calibrate_stage,
    noisy_measure,
    split_stages,
)
from .polarimeter import PipelineConfig
from .service import DEFAULT_FRAME_HZ, DEFAULT_LOOP_HZ, serve


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load_cfg(path: Optional[str]) -> dict[str, str]:
    actual = cfgmod.config_path_from_env(path) if path is None else path
    if actual is None:
        return {"schema": cfgmod.SCHEMA_VERSION}
    return cfgmod.load_config(actual)


def _unit_or_none(vals: Sequence[float]) -> Optional[np.ndarray]:
    v = np.asarray(vals, dtype=float)
    n = float(np.linalg.norm(v))
    if not math.isfinite(n) or abs(n - 1.0) > 1e-3:
        return None
    return v / n


def _loop_config(cfg: dict[str, str], args: argparse.Namespace) -> LoopConfig:
    stages = cfgmod.get_int(cfg, "stages", 3)
    profile_name = cfgmod.get_str(cfg, "profile", "default")
    if getattr(args, "profile", None):
        profile_name = args.profile
    seed = cfgmod.get_int(cfg, "seed", 0)
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    max_ticks = cfgmod.get_int(cfg, "max_ticks", 1000)
    if getattr(args, "ticks", None) is not None:
        max_ticks = args.ticks
    drift = cfgmod.get_float(cfg, "drift_sigma", 0.0)
    if getattr(args, "drift", None) is not None:
        drift = args.drift
    cals = tuple(cfgmod.stage_calibrations(cfg, DEFAULT_CALIBRATION, stages))
    pipe = PipelineConfig(
        intensity=cfgmod.get_float(cfg, "pipeline.intensity", 1.0),
        responsivity=cfgmod.get_float(cfg, "pipeline.responsivity", 5.0),
        noise_sigma=cfgmod.get_float(cfg, "pipeline.noise_sigma", 0.0),
        bits=cfgmod.get_bits(cfg, "pipeline.bits", 12),
    )
    return LoopConfig(
        tick_dt_us=cfgmod.get_float(cfg, "tick_dt_us", 1.0),
        target=tuple(cfgmod.get_vec3(cfg, "target", (0.0, 0.0, 1.0))),
        reference_in=tuple(cfgmod.get_vec3(cfg, "reference", (1.0, 0.0, 0.0))),
        stage_count=stages,
        profile=get_profile(profile_name),
        pipeline=pipe,
        cal_true=cals,
        cal_est=cals,
        drift_sigma=drift,
        seed=seed,
        max_ticks=max_ticks,
        alignment_error_rad=cfgmod.get_float(cfg, "alignment_error_rad", 0.0),
        open_loop=bool(getattr(args, "open_loop", False)),
        settle_threshold_rad=cfgmod.get_float(cfg, "settle_threshold_rad", 1e-4),
    )


# -- subcommands -------------------------------------------------------------


def cmd_solve(args: argparse.Namespace) -> int:
    cur = _unit_or_none(args.state[0:3])
    tgt = _unit_or_none(args.state[3:6])
    if cur is None or tgt is None:
        _err("current and target must each be unit vectors (within 1e-3)")
        return 2
    cfg = _load_cfg(args.config)
    stages = args.stages if args.stages is not None else cfgmod.get_int(cfg, "stages", 3)
    cals = cfgmod.stage_calibrations(cfg, DEFAULT_CALIBRATION, stages)
    ret = solve_retarder(cur, tgt)
    try:
        cmd = split_stages(ret, cals, stages)
    except (Unsatisfiable, VoltageRangeExceeded) as err:
        _err(str(err))
        return 3
    if args.json:
        out = {
            "alpha_rad": ret.alpha,
            "delta": ret.delta,
            "stages": [
                {"alpha_rad": s.alpha, "v_a": s.v_a, "v_b": s.v_b, "v_c": s.v_c}
                for s in cmd.stages
            ],
        }
        print(json.dumps(out))
    else:
        print(f"alpha_rad: {ret.alpha!r}")
        print(f"delta: {ret.delta!r}")
        for i, s in enumerate(cmd.stages, start=1):
            print(
                f"stage{i}: alpha_rad={s.alpha!r} v_a={s.v_a:.6g} "
                f"v_b={s.v_b:.6g} v_c={s.v_c:.6g}"
            )
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    stages = args.stages if args.stages is not None else cfgmod.get_int(cfg, "stages", 3)
    truths = cfgmod.stage_calibrations(cfg, DEFAULT_CALIBRATION, stages)
    rng = np.random.default_rng(args.seed)
    sweep = SweepConfig(fit_tol=2e-2 if args.noise > 0 else 1e-3)
    estimates = []
    for i, truth in enumerate(truths, start=1):
        plant = PcmStagePlant(truth)
        measure = noisy_measure(args.noise, rng) if args.noise > 0 else None
        est = calibrate_stage(plant, cfg=sweep, measure=measure)
        estimates.append(est)
        print(
            f"stage{i}: v_pi={est.v_pi:.6g} v_0={est.v_0:.6g} "
            f"v_bias_a={est.v_bias_a:.6g} v_bias_c={est.v_bias_c:.6g}"
        )
    if args.out:
        cfgmod.write_calibration(args.out, estimates)
        print(f"wrote {args.out}")
    return 0


def cmd_ratecheck(args: argparse.Namespace) -> int:
    names = [args.profile] if args.profile else sorted(PROFILES)
    print("profile,swing_v,full_us,rate_hz")
    for name in names:
        profile = get_profile(name)
        for row_name, swing, full_us, rate in rate_table(profile):
            full_txt = "0" if full_us == 0.0 else f"{full_us:.6g}"
            rate_txt = "inf" if math.isinf(rate) else f"{rate:.6g}"
            print(f"{row_name},{swing:.6g},{full_txt},{rate_txt}")
    return 0


def _load_events(path: str) -> list[tuple[int, Event]]:
    events: list[tuple[int, Event]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as err:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({err})") from None
            if not isinstance(d, dict):
                raise ValueError(f"{path}:{lineno}: event must be an object")
            tick = d.pop("tick", None)
            if not isinstance(tick, int) or isinstance(tick, bool) or tick < 0:
                raise ValueError(f"{path}:{lineno}: 'tick' must be an integer >= 0")
            try:
                events.append((tick, event_from_dict(d)))
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: {err}") from None
    return events


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    loop_cfg = _loop_config(cfg, args)
    events = _load_events(args.events) if args.events else []
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        summary = run(loop_cfg, events, sink=lambda fr: print(fr.to_json(), file=out))
    finally:
        if out is not sys.stdout:
            out.close()
    if not args.quiet:
        print(f"ticks: {summary.ticks}", file=sys.stderr)
        print(f"mean_misalign_rad: {summary.mean_misalign_rad:.6g}", file=sys.stderr)
        print(f"max_misalign_rad: {summary.max_misalign_rad:.6g}", file=sys.stderr)
        print(f"final_misalign_rad: {summary.final_misalign_rad:.6g}", file=sys.stderr)
        print(
            f"mean_true_misalign_rad: {summary.mean_true_misalign_rad:.6g}",
            file=sys.stderr,
        )
        settles = ",".join("-" if s is None else str(s) for s in summary.settle_ticks)
        print(f"settle_ticks: {settles}", file=sys.stderr)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    loop_cfg = _loop_config(cfg, args)
    frame_hz = cfgmod.get_float(cfg, "serve.frame_hz", DEFAULT_FRAME_HZ)
    loop_hz = cfgmod.get_float(cfg, "serve.loop_hz", DEFAULT_LOOP_HZ)
    if args.frame_hz is not None:
        frame_hz = args.frame_hz
    if args.loop_hz is not None:
        loop_hz = args.loop_hz
    print(f"serving on http://{args.bind} (frames at {frame_hz:g}/s)", file=sys.stderr)
    serve(loop_cfg, bind=args.bind, frame_hz=frame_hz, loop_hz=loop_hz)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polcontrol",
        description="Polarization switching and stabilization toolkit",
    )
    p.add_argument("--config", help="config file path (or POLCONTROL_CONFIG)")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one retarder correction")
    ps.add_argument(
        "state",
        nargs=6,
        type=float,
        metavar="S",
        help="current s1 s2 s3, then target s1 s2 s3",
    )
    ps.add_argument("--stages", type=int, help="stage count (default from config)")
    ps.add_argument("--json", action="store_true", help="machine-readable output")
    ps.set_defaults(fn=cmd_solve)

    pc = sub.add_parser("calibrate", help="sweep a simulated cell, print constants")
    pc.add_argument("--stages", type=int, help="stage count (default from config)")
    pc.add_argument("--noise", type=float, default=0.0, help="measurement noise sigma")
    pc.add_argument("--seed", type=int, default=0, help="noise seed")
    pc.add_argument("--out", help="write calibration config to this path")
    pc.set_defaults(fn=cmd_calibrate)

    pr = sub.add_parser("ratecheck", help="switching-rate table as CSV")
    pr.add_argument("--profile", help="limit to one driver profile")
    pr.set_defaults(fn=cmd_ratecheck)

    pm = sub.add_parser("simulate", help="run the closed loop, stream JSONL frames")
    pm.add_argument("--ticks", type=int, help="number of ticks to run")
    pm.add_argument("--seed", type=int, help="simulation seed")
    pm.add_argument("--events", help="JSONL event script ({'tick': N, 'kind': ...})")
    pm.add_argument("--out", help="write frames here instead of stdout")
    pm.add_argument("--drift", type=float, help="channel drift sigma per tick")
    pm.add_argument("--profile", help="driver profile name")
    pm.add_argument("--open-loop", action="store_true", help="disable the controller")
    pm.add_argument("--quiet", action="store_true", help="suppress the run summary")
    pm.set_defaults(fn=cmd_simulate)

    pv = sub.add_parser("serve", help="HTTP frame stream and command endpoint")
    pv.add_argument("--bind", default="127.0.0.1:8710", help="host:port to listen on")
    pv.add_argument("--frame-hz", type=float, dest="frame_hz", help="stream rate")
    pv.add_argument("--loop-hz", type=float, dest="loop_hz", help="tick rate")
    pv.add_argument("--profile", help="driver profile name")
    pv.add_argument("--seed", type=int, help="simulation seed")
    pv.add_argument("--ticks", type=int, help=argparse.SUPPRESS)
    pv.add_argument("--drift", type=float, help="channel drift sigma per tick")
    pv.set_defaults(fn=cmd_serve)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigInvalid, UnknownProfile, ValueError, OSError) as err:
        _err(str(err))
        return 2
    except PolControlError as err:
        _err(str(err))
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
