"""Closed-loop polarization stabilization.

A single loop object owns the full signal chain: a drifting fiber channel,
a multi-stage retarder cell driven by slew-limited amplifiers, and the
polarimeter pipeline.  Each call to :meth:`PolarizationLoop.tick` advances
the plant by one sample interval, measures the output state, solves for the
corrective retarder, and emits a frame.  Given the same configuration, seed,
and event script, the frame stream is bit-identical across runs.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import LinearRetarder, Rotation, misalignment, solve_retarder, sop
from .driver import PROFILES, DriverProfile, DriverState, command, step
from .errors import ConfigInvalid, DegenerateDrive, NonPositiveIntensity, Unsatisfiable
from .pcm import (
    DEFAULT_CALIBRATION,
    CalibrationParams,
    PcmStagePlant,
    StageVoltages,
    drive_coefficient,
    split_stages,
)
from .polarimeter import PipelineConfig, pipeline

FRAME_SCHEMA = 1

EVENT_KINDS = ("SetTarget", "SetDrift", "InjectJump", "Pause", "Resume", "Reset")

# Renormalization guard for state vectors arriving from outside callers.
_UNIT_SLOP = 1e-3


@dataclass(frozen=True)
class Event:
    """One operator command, applied at a tick boundary."""

    kind: str
    sop: Optional[Tuple[float, float, float]] = None
    sigma: Optional[float] = None
    angle: Optional[float] = None
    axis: Optional[Tuple[float, float, float]] = None
    client_id: Optional[str] = None
    seq: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "SetTarget":
            if self.sop is None:
                raise ValueError("SetTarget requires 'sop'")
            object.__setattr__(self, "sop", _unit_tuple(self.sop, "sop"))
        elif self.kind == "SetDrift":
            if self.sigma is None or not math.isfinite(self.sigma) or self.sigma < 0:
                raise ValueError("SetDrift requires sigma >= 0")
        elif self.kind == "InjectJump":
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError("InjectJump requires a finite 'angle'")
            if self.axis is not None:
                object.__setattr__(self, "axis", _unit_tuple(self.axis, "axis"))

    def descriptor(self) -> dict:
        """Short form recorded in a frame's applied-events field."""
        d: dict = {"kind": self.kind}
        if self.kind == "SetTarget":
            d["sop"] = list(self.sop)
        elif self.kind == "SetDrift":
            d["sigma"] = self.sigma
        elif self.kind == "InjectJump":
            d["angle"] = self.angle
            if self.axis is not None:
                d["axis"] = list(self.axis)
        if self.client_id is not None:
            d["client_id"] = self.client_id
        if self.seq is not None:
            d["seq"] = self.seq
        return d


def _unit_tuple(v: Sequence[float], name: str) -> Tuple[float, float, float]:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have three components")
    n = float(np.linalg.norm(arr))
    if not math.isfinite(n) or abs(n - 1.0) > _UNIT_SLOP:
        raise ValueError(f"{name} must be a unit vector (|v| = {n:.6g})")
    arr = arr / n
    return (float(arr[0]), float(arr[1]), float(arr[2]))


def event_from_dict(d: dict) -> Event:
    """Build an event from a decoded JSON object, rejecting stray fields."""
    allowed = {"kind", "sop", "sigma", "angle", "axis", "client_id", "seq"}
    extra = set(d) - allowed
    if extra:
        raise ValueError(f"unknown event fields: {sorted(extra)}")
    kind = d.get("kind")
    if not isinstance(kind, str):
        raise ValueError("event requires a string 'kind'")
    return Event(
        kind=kind,
        sop=tuple(d["sop"]) if d.get("sop") is not None else None,
        sigma=d.get("sigma"),
        angle=d.get("angle"),
        axis=tuple(d["axis"]) if d.get("axis") is not None else None,
        client_id=d.get("client_id"),
        seq=d.get("seq"),
    )


@dataclass
class ChannelState:
    """Fiber birefringence as a rotation, plus its drift process."""

    q: Rotation
    sigma_drift: float
    rng: np.random.Generator


def random_unit_axis(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = float(np.linalg.norm(v))
        if n > 1e-12:
            return v / n


def drift_step(ch: ChannelState) -> None:
    """One step of the isotropic rotational random walk.

    Draws nothing from the generator when sigma is zero, so an undisturbed
    channel stays bit-identical no matter how long the loop runs.
    """
    if ch.sigma_drift == 0.0:
        return
    axis = random_unit_axis(ch.rng)
    angle = float(ch.rng.normal(0.0, ch.sigma_drift))
    ch.q = (Rotation.from_axis_angle(axis, angle) * ch.q).normalized()


def _perpendicular(v: np.ndarray) -> np.ndarray:
    # deterministic perpendicular: cross against the axis v leans on least
    pivot = np.zeros(3)
    pivot[int(np.argmin(np.abs(v)))] = 1.0
    p = np.cross(v, pivot)
    return p / float(np.linalg.norm(p))


def estimate_channel(measured: Sequence[float], reference_in: Sequence[float]) -> Rotation:
    """Minimal rotation carrying the launched reference to the measured state.

    A single input/output pair pins down only two of the three rotation
    degrees of freedom; the gauge is fixed by choosing the rotation with the
    smallest angle.  Antipodal pairs get a deterministic axis perpendicular
    to the reference.
    """
    r = sop(*reference_in)
    m = sop(*measured)
    d = float(np.dot(r, m))
    axis = np.cross(r, m)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        if d > 0.0:
            return Rotation.identity()
        return Rotation.from_axis_angle(_perpendicular(r), math.pi)
    return Rotation.from_axis_angle(axis / n, math.atan2(n, d))


def encode_inverse(desired: Sequence[float], channel_est: Rotation) -> np.ndarray:
    """Launch state that the estimated channel would map onto ``desired``."""
    return channel_est.conjugate().apply(np.asarray(desired, dtype=float))


@dataclass(frozen=True)
class LoopConfig:
    tick_dt_us: float = 1.0
    target: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    reference_in: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    stage_count: int = 3
    profile: DriverProfile = PROFILES["default"]
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    cal_true: Optional[Tuple[CalibrationParams, ...]] = None
    cal_est: Optional[Tuple[CalibrationParams, ...]] = None
    drift_sigma: float = 0.0
    seed: int = 0
    max_ticks: int = 1000
    alignment_error_rad: float = 0.0
    open_loop: bool = False
    settle_threshold_rad: float = 1e-4
    degenerate_margin_v: float = 1.0
    initial_channel: Optional[Rotation] = None

    def __post_init__(self) -> None:
        if not (self.tick_dt_us > 0 and math.isfinite(self.tick_dt_us)):
            raise ConfigInvalid("tick_dt_us must be positive and finite")
        if not 1 <= self.stage_count <= 8:
            raise ConfigInvalid("stage_count must be within [1, 8]")
        if self.max_ticks < 1:
            raise ConfigInvalid("max_ticks must be at least 1")
        if self.drift_sigma < 0 or not math.isfinite(self.drift_sigma):
            raise ConfigInvalid("drift_sigma must be >= 0")
        if self.settle_threshold_rad <= 0:
            raise ConfigInvalid("settle_threshold_rad must be positive")
        if self.degenerate_margin_v <= 0:
            raise ConfigInvalid("degenerate_margin_v must be positive")
        if not math.isfinite(self.alignment_error_rad):
            raise ConfigInvalid("alignment_error_rad must be finite")
        try:
            object.__setattr__(self, "target", _unit_tuple(self.target, "target"))
            object.__setattr__(
                self, "reference_in", _unit_tuple(self.reference_in, "reference_in")
            )
        except ValueError as err:
            raise ConfigInvalid(str(err)) from None
        for name in ("cal_true", "cal_est"):
            cals = getattr(self, name)
            if cals is not None and len(cals) != self.stage_count:
                raise ConfigInvalid(f"{name} must list one entry per stage")

    def true_calibrations(self) -> Tuple[CalibrationParams, ...]:
        return self.cal_true or (DEFAULT_CALIBRATION,) * self.stage_count

    def estimated_calibrations(self) -> Tuple[CalibrationParams, ...]:
        return self.cal_est or self.true_calibrations()


@dataclass
class LoopFrame:
    tick: int
    sop_meas: List[float]
    dop: float
    px: int
    py: int
    v_cmd: List[List[float]]
    v_out: List[List[float]]
    misalign_rad: float
    launch: List[float]
    chan_est: List[float]
    applied: List[dict]
    errors: List[str]
    true_misalign_rad: float
    encode_err_rad: float
    paused: bool

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "sop_meas": self.sop_meas,
            "dop": self.dop,
            "px": self.px,
            "py": self.py,
            "v_cmd": self.v_cmd,
            "v_out": self.v_out,
            "misalign_rad": self.misalign_rad,
            "launch": self.launch,
            "schema": FRAME_SCHEMA,
            "chan_est": self.chan_est,
            "applied": self.applied,
            "errors": self.errors,
            "true_misalign_rad": self.true_misalign_rad,
            "encode_err_rad": self.encode_err_rad,
            "paused": self.paused,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


class PolarizationLoop:
    """Deterministic fixed-step simulation of the stabilization loop.

    Tick order: apply queued events, drift the channel, advance the drivers,
    realize the retarder stages from the electrode voltages actually present,
    propagate the reference through channel and stages, measure, then solve
    and latch the next command.  Commands therefore act one tick after they
    are computed, matching a sampled controller with a zero-order hold.
    """

    def __init__(self, cfg: LoopConfig):
        self.cfg = cfg
        self._events: deque[Event] = deque()
        self._init_state()

    def _init_state(self) -> None:
        cfg = self.cfg
        root = np.random.SeedSequence(cfg.seed)
        drift_ss, noise_ss, jump_ss = root.spawn(3)
        self._noise_rng = np.random.default_rng(noise_ss)
        self._jump_rng = np.random.default_rng(jump_ss)
        initial_q = cfg.initial_channel or Rotation.identity()
        self.channel = ChannelState(
            q=initial_q, sigma_drift=cfg.drift_sigma, rng=np.random.default_rng(drift_ss)
        )
        self.target = np.asarray(cfg.target, dtype=float)
        self.cal_true = cfg.true_calibrations()
        self.cal_est = cfg.estimated_calibrations()
        self.plants = [PcmStagePlant(c) for c in self.cal_true]
        # controller-side replicas share the plant math but run on the
        # estimated constants, turning measured electrode voltages back
        # into the retardances the cell is believed to hold
        self.replicas = [PcmStagePlant(c) for c in self.cal_est]
        self.drivers = []
        self.cmd_alpha = [0.0] * cfg.stage_count
        for cal in self.cal_est:
            pair = (
                DriverState(v_out=cal.v_bias_a, v_cmd=cal.v_bias_a),
                DriverState(v_out=cal.v_bias_c, v_cmd=cal.v_bias_c),
            )
            self.drivers.append(pair)
        if cfg.alignment_error_rad != 0.0:
            ref = np.asarray(cfg.reference_in, dtype=float)
            mis = Rotation.from_axis_angle(_perpendicular(ref), cfg.alignment_error_rad)
            self._ref_physical = mis.apply(ref)
        else:
            self._ref_physical = np.asarray(cfg.reference_in, dtype=float)
        self.tick_count = 0
        self.paused = False
        self._margin_scale = 1.0
        self._consecutive_degen = 0
        self._last_payload: Optional[dict] = None
        self._last_measured: Optional[np.ndarray] = None
        self._last_chan_est = Rotation.identity()

    def submit(self, event: Event) -> None:
        self._events.append(event)

    # -- internals ---------------------------------------------------------

    def _apply_event(self, ev: Event) -> None:
        if ev.kind == "SetTarget":
            self.target = np.asarray(ev.sop, dtype=float)
        elif ev.kind == "SetDrift":
            self.channel.sigma_drift = float(ev.sigma)
        elif ev.kind == "InjectJump":
            axis = (
                np.asarray(ev.axis, dtype=float)
                if ev.axis is not None
                else random_unit_axis(self._jump_rng)
            )
            jump = Rotation.from_axis_angle(axis, float(ev.angle))
            self.channel.q = (jump * self.channel.q).normalized()
        elif ev.kind == "Pause":
            self.paused = True
        elif ev.kind == "Resume":
            self.paused = False
        elif ev.kind == "Reset":
            pending = self._events
            self._events = deque()
            tick = self.tick_count
            self._init_state()
            self.tick_count = tick
            self._events = pending

    def _realize_stages(self, errors: List[str]) -> Tuple[Rotation, bool]:
        total = Rotation.identity()
        degenerate = False
        for i, plant in enumerate(self.plants):
            va = self.drivers[i][0].v_out
            vc = self.drivers[i][1].v_out
            try:
                plant.apply(StageVoltages(va, 0.0, vc, alpha=self.cmd_alpha[i]))
            except DegenerateDrive:
                degenerate = True
                errors.append(f"stage{i + 1}: degenerate drive, holding last state")
            realized = plant.realized
            # light traverses stage 1 first, so stage i composes on the left
            total = realized.to_rotation() * total
        return total, degenerate

    def _replica_rotation(self) -> Rotation:
        total = Rotation.identity()
        for i, replica in enumerate(self.replicas):
            va = self.drivers[i][0].v_out
            vc = self.drivers[i][1].v_out
            try:
                replica.apply(StageVoltages(va, 0.0, vc, alpha=self.cmd_alpha[i]))
            except DegenerateDrive:
                pass
            realized = replica.realized
            total = realized.to_rotation() * total
        return total

    def _nudged_alpha(self, alpha: float, errors: List[str]) -> float:
        """Keep the commanded axis out of the voltage-insensitive direction.

        Near the axis where the drive coefficient vanishes, any retardance
        would demand unbounded volts.  Rotate the axis by the smallest step
        that restores at least ``degenerate_margin_v`` of coefficient.  The
        nudge trades exact reachability for a bounded steady-state residual
        of roughly theta * step / 2 radians, reported every tick it persists.
        """
        margin = self.cfg.degenerate_margin_v * self._margin_scale
        worst = min(abs(drive_coefficient(alpha, c)) for c in self.cal_est)
        if worst >= margin:
            return alpha
        scale = min(math.hypot(2.0 * c.v_0, c.v_pi) for c in self.cal_est)
        step_rad = min(margin / scale + 1e-3, math.pi / 4)
        for k in range(1, 64):
            for cand in (alpha + k * step_rad, alpha - k * step_rad):
                cand %= 2.0 * math.pi
                if min(abs(drive_coefficient(cand, c)) for c in self.cal_est) >= margin:
                    errors.append(
                        f"axis nudged {k * step_rad:.4f} rad off voltage-degenerate direction"
                    )
                    return cand
        errors.append("axis nudge failed, commanding unchanged axis")
        return alpha

    def _control(self, measured: np.ndarray, errors: List[str]) -> None:
        p_hat = self._replica_rotation()
        x_hat = p_hat.conjugate().apply(measured)
        n = float(np.linalg.norm(x_hat))
        if n < 1e-9:
            errors.append("controller input degenerate, holding command")
            return
        x_hat = x_hat / n
        corr = solve_retarder(x_hat, self.target)
        alpha = self._nudged_alpha(corr.alpha, errors)
        try:
            cmd = split_stages(
                LinearRetarder(alpha, corr.delta), self.cal_est, self.cfg.stage_count
            )
        except (Unsatisfiable, DegenerateDrive) as err:
            errors.append(f"command rejected: {err}")
            return
        profile = self.cfg.profile
        chain = profile.gain * profile.pre_amp_gain
        for i, stage in enumerate(cmd.stages):
            self.cmd_alpha[i] = stage.alpha
            command(self.drivers[i][0], stage.v_a / chain, profile)
            command(self.drivers[i][1], stage.v_c / chain, profile)

    def tick(self) -> LoopFrame:
        applied: List[dict] = []
        errors: List[str] = []
        while self._events:
            ev = self._events.popleft()
            self._apply_event(ev)
            applied.append(ev.descriptor())

        if self.paused and self._last_payload is not None:
            payload = dict(self._last_payload)
            frame = LoopFrame(
                tick=self.tick_count,
                applied=applied,
                errors=[],
                paused=True,
                **payload,
            )
            self.tick_count += 1
            return frame

        if not self.paused:
            drift_step(self.channel)
            profile = self.cfg.profile
            for pair in self.drivers:
                step(pair[0], self.cfg.tick_dt_us, profile)
                step(pair[1], self.cfg.tick_dt_us, profile)

        pcm_rot, degenerate = self._realize_stages(errors)
        if degenerate:
            # widen the axis keep-out band while the true cell keeps landing
            # in a dead direction the estimated constants failed to predict
            self._consecutive_degen += 1
        else:
            self._consecutive_degen = 0
        self._margin_scale = float(min(2.0 ** self._consecutive_degen, 64.0))
        s_chan = self.channel.q.apply(self._ref_physical)
        s_out = pcm_rot.apply(s_chan)

        try:
            res = pipeline(s_out, self.cfg.pipeline, rng=self._noise_rng)
            measured = None if res.sop is None else np.asarray(res.sop, dtype=float)
            dop = res.dop
            point = res.point
        except NonPositiveIntensity:
            errors.append("measurement failed: nonpositive intensity")
            measured, dop, point = None, 0.0, None

        if measured is None:
            if self._last_measured is None:
                measured = np.asarray(self.cfg.reference_in, dtype=float)
            else:
                measured = self._last_measured
            errors.append("reusing last good measurement")
        self._last_measured = measured

        if not self.paused and not self.cfg.open_loop:
            self._control(measured, errors)

        chan_est = estimate_channel(measured, self.cfg.reference_in)
        self._last_chan_est = chan_est
        launch = encode_inverse(self.target, chan_est)
        # consistency check for the encode path: drive the estimated launch
        # through the true physics and compare to the target
        replay = pcm_rot.apply(self.channel.q.apply(launch))
        encode_err = misalignment(replay, self.target)

        mis = misalignment(measured, self.target)
        true_mis = misalignment(s_out / np.linalg.norm(s_out), self.target)

        if point is not None:
            px, py = point.px, point.py
        elif self._last_payload is not None:
            px, py = self._last_payload["px"], self._last_payload["py"]
        else:
            px, py = 0, 0

        payload = {
            "sop_meas": [float(v) for v in measured],
            "dop": float(dop),
            "px": int(px),
            "py": int(py),
            "v_cmd": [
                [float(pair[0].v_cmd), float(pair[1].v_cmd)] for pair in self.drivers
            ],
            "v_out": [
                [float(pair[0].v_out), float(pair[1].v_out)] for pair in self.drivers
            ],
            "misalign_rad": float(mis),
            "launch": [float(v) for v in launch],
            "chan_est": [float(v) for v in chan_est.as_tuple()],
            "true_misalign_rad": float(true_mis),
            "encode_err_rad": float(encode_err),
        }
        self._last_payload = payload
        frame = LoopFrame(
            tick=self.tick_count,
            applied=applied,
            errors=errors,
            paused=self.paused,
            **payload,
        )
        self.tick_count += 1
        return frame


@dataclass
class RunSummary:
    ticks: int
    mean_misalign_rad: float
    max_misalign_rad: float
    final_misalign_rad: float
    mean_true_misalign_rad: float
    settle_ticks: List[Optional[int]]


def run(
    cfg: LoopConfig,
    events: Iterable[Tuple[int, Event]] = (),
    sink: Optional[Callable[[LoopFrame], None]] = None,
) -> RunSummary:
    """Drive a loop for ``cfg.max_ticks`` ticks with a scheduled event script.

    ``events`` pairs a tick index with the event to submit before that tick
    runs.  ``settle_ticks`` records, for each target change, how many ticks
    passed before measured misalignment first dropped below the settle
    threshold (None if it never did).
    """
    loop = PolarizationLoop(cfg)
    schedule = sorted(events, key=lambda item: item[0])
    idx = 0
    mis_sum = 0.0
    mis_max = 0.0
    true_sum = 0.0
    last_mis = 0.0
    pending_targets: List[int] = [0]
    settle_ticks: List[Optional[int]] = [None]
    for t in range(cfg.max_ticks):
        while idx < len(schedule) and schedule[idx][0] <= t:
            ev = schedule[idx][1]
            loop.submit(ev)
            if ev.kind == "SetTarget":
                pending_targets.append(t)
                settle_ticks.append(None)
            idx += 1
        frame = loop.tick()
        if sink is not None:
            sink(frame)
        mis_sum += frame.misalign_rad
        mis_max = max(mis_max, frame.misalign_rad)
        true_sum += frame.true_misalign_rad
        last_mis = frame.misalign_rad
        if frame.misalign_rad < cfg.settle_threshold_rad:
            for j, start in enumerate(pending_targets):
                if settle_ticks[j] is None and t >= start:
                    settle_ticks[j] = t - start
    n = cfg.max_ticks
    return RunSummary(
        ticks=n,
        mean_misalign_rad=mis_sum / n,
        max_misalign_rad=mis_max,
        final_misalign_rad=last_mis,
        mean_true_misalign_rad=true_sum / n,
        settle_ticks=settle_ticks,
    )
