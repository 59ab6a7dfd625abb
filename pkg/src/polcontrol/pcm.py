"""Lithium-niobate polarization controller model.

Maps retarder commands to electrode voltages, splits commands across
stages under the +/-70 V drive limit, simulates a stage with hidden true
constants, and estimates those constants from sweep measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import LinearRetarder, Vec3, solve_retarder
from .errors import (
    CalibrationFailed,
    DegenerateDrive,
    Unsatisfiable,
    VoltageRangeExceeded,
)

V_LIMIT = 70.0
_SANITY_MAX = 200.0
# Largest representable retardance fraction after clamping.
_DELTA_MAX = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class CalibrationParams:
    """Per-stage device constants: half-wave voltage, full-rotation voltage,
    and the two electrode bias offsets that null the stage."""

    v_pi: float
    v_0: float
    v_bias_a: float
    v_bias_c: float

    def __post_init__(self) -> None:
        for name in ("v_pi", "v_0", "v_bias_a", "v_bias_c"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val!r}")
        if not 0.0 < self.v_pi <= _SANITY_MAX:
            raise ValueError(f"v_pi must be in (0, {_SANITY_MAX}], got {self.v_pi!r}")
        if not 0.0 < self.v_0 <= _SANITY_MAX:
            raise ValueError(f"v_0 must be in (0, {_SANITY_MAX}], got {self.v_0!r}")
        for name in ("v_bias_a", "v_bias_c"):
            val = getattr(self, name)
            if abs(val) > V_LIMIT:
                raise ValueError(f"{name} must be within +/-{V_LIMIT} V, got {val!r}")


# Illustrative constants for demos and defaults; inside the drive window.
DEFAULT_CALIBRATION = CalibrationParams(v_pi=72.0, v_0=35.0, v_bias_a=3.0, v_bias_c=-2.0)


@dataclass(frozen=True)
class StageVoltages:
    """Electrode drive for one stage.  The middle electrode is grounded by
    construction.  ``alpha`` rides along as command metadata: the axis the
    controller asked for, which the stage realizes directly."""

    v_a: float
    v_b: float
    v_c: float
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.v_b != 0.0:
            raise ValueError(f"v_b must be exactly 0, got {self.v_b!r}")


@dataclass(frozen=True)
class MultiStageCommand:
    stages: tuple[StageVoltages, ...]


def drive_coefficient(alpha: float, cal: CalibrationParams) -> float:
    """Volts of common-mode drive per unit retardance along axis ``alpha``."""
    return 2.0 * cal.v_0 * math.sin(alpha) - cal.v_pi * math.cos(alpha)


def retarder_to_voltages(r: LinearRetarder, cal: CalibrationParams) -> StageVoltages:
    """Electrode voltages realizing ``r`` on a stage with constants ``cal``.

    Raises VoltageRangeExceeded when either active electrode leaves the
    +/-70 V window; the caller should then split across stages.
    """
    drive = r.delta * drive_coefficient(r.alpha, cal)
    v_a = drive + cal.v_bias_a
    v_c = drive + cal.v_bias_c
    if abs(v_a) > V_LIMIT or abs(v_c) > V_LIMIT:
        raise VoltageRangeExceeded(
            f"stage drive ({v_a:.3f}, {v_c:.3f}) V exceeds +/-{V_LIMIT} V"
        )
    return StageVoltages(v_a=v_a, v_b=0.0, v_c=v_c, alpha=r.alpha)


def split_stages(
    r: LinearRetarder, cal_per_stage: Sequence[CalibrationParams], n: Optional[int] = None
) -> MultiStageCommand:
    """Spread a retarder over up to ``n`` same-axis stages of delta/k each.

    k is the smallest stage count whose per-stage voltages all pass the
    range check; remaining stages idle at their bias voltages.  Same-axis
    fractions compose exactly: k rotations of 2*pi*delta/k about one axis
    equal one rotation of 2*pi*delta.
    """
    if n is None:
        n = len(cal_per_stage)
    if n < 1 or n > len(cal_per_stage):
        raise ValueError(f"stage count {n} outside 1..{len(cal_per_stage)}")
    last_err: Exception | None = None
    for k in range(1, n + 1):
        part = LinearRetarder(r.alpha, r.delta / k) if k > 1 else r
        try:
            active = [retarder_to_voltages(part, cal_per_stage[i]) for i in range(k)]
        except VoltageRangeExceeded as err:
            last_err = err
            continue
        idle = [
            retarder_to_voltages(LinearRetarder(r.alpha, 0.0), cal_per_stage[i])
            for i in range(k, n)
        ]
        return MultiStageCommand(stages=tuple(active + idle))
    raise Unsatisfiable(
        f"retarder (alpha={r.alpha:.4f}, delta={r.delta:.4f}) needs more than "
        f"{n} stages: {last_err}"
    )


class PcmStagePlant:
    """One simulated stage.  ``true_params`` stays hidden from the controller.

    Forward model: the stage realizes the commanded axis and scales the
    retardance by the drive it actually received.  Electrode sensitivity is
    axis-weighted: w_a = (1+cos a)/2, w_c = (1-cos a)/2, so electrode A alone
    drives the axis at alpha=0, electrode C alone at alpha=pi, and both share
    equally at alpha=pi/2.  At matched calibration the model inverts
    retarder_to_voltages exactly; the weighting keeps the two bias offsets
    separately observable during calibration.
    """

    def __init__(
        self,
        true_params: CalibrationParams,
        eps_denominator: float = 1e-3,
        realized: Optional[LinearRetarder] = None,
    ) -> None:
        self.true_params = true_params
        self.eps_denominator = float(eps_denominator)
        self.realized = realized if realized is not None else LinearRetarder(0.0, 0.0)

    def apply(self, cmd: StageVoltages) -> LinearRetarder:
        if abs(cmd.v_a) > V_LIMIT or abs(cmd.v_c) > V_LIMIT:
            raise VoltageRangeExceeded(
                f"plant driven outside +/-{V_LIMIT} V: ({cmd.v_a}, {cmd.v_c})"
            )
        alpha = cmd.alpha % (2.0 * math.pi)
        tp = self.true_params
        den = drive_coefficient(alpha, tp)
        if abs(den) < self.eps_denominator:
            raise DegenerateDrive(
                f"axis alpha={alpha:.6f} is insensitive: |drive coefficient| = "
                f"{abs(den):.2e} V < {self.eps_denominator} V"
            )
        w_a = 0.5 * (1.0 + math.cos(alpha))
        w_c = 0.5 * (1.0 - math.cos(alpha))
        c = w_a * (cmd.v_a - tp.v_bias_a) + w_c * (cmd.v_c - tp.v_bias_c)
        delta = min(max(c / den, 0.0), _DELTA_MAX)
        self.realized = LinearRetarder(alpha, delta)
        return self.realized


MeasureFn = Callable[[Vec3], Vec3]


def noisy_measure(sigma: float, rng: np.random.Generator) -> MeasureFn:
    """Measurement closure adding isotropic readback noise, renormalized."""

    def measure(s: Vec3) -> Vec3:
        out = np.asarray(s, dtype=float) + rng.normal(0.0, sigma, size=3)
        return out / np.linalg.norm(out)

    return measure


@dataclass(frozen=True)
class SweepConfig:
    points: int = 64
    v_min: float = -V_LIMIT
    v_max: float = V_LIMIT
    # Retardance band whose samples enter the line fits; outside it the
    # plant clamps or the phase wraps.
    band_lo: float = 0.05
    band_hi: float = 0.95
    min_points: int = 8
    fit_tol: float = 1e-3

    def grid(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.points)


# Probe orthogonal to every equatorial axis: maximal rotation visibility
# for all three calibration sweeps.
DEFAULT_PROBE = np.array([0.0, 0.0, 1.0])


def _delta_about_axis(alpha_cmd: float, fitted: LinearRetarder) -> float:
    """Re-express a solved retarder as a fraction about the commanded axis.

    Noise can hand the solver the mirrored eigenmode (-e, 2*pi - theta),
    which describes the same rotation; fold it back so sweep samples sit on
    one continuous line.
    """
    e_cmd = LinearRetarder(alpha_cmd % (2.0 * math.pi), 0.0).eigenmode()
    dot = float(np.dot(fitted.eigenmode(), e_cmd))
    return fitted.delta if dot >= 0.0 else 1.0 - fitted.delta


def _sweep_thetas(
    plant: PcmStagePlant,
    probe: Vec3,
    alpha: float,
    electrode: str,
    cfg: SweepConfig,
    measure: MeasureFn,
) -> tuple[np.ndarray, np.ndarray]:
    """Drive one electrode pattern over the grid, return (volts, theta) of
    the in-band samples.  theta is recovered through the SOP solver, so the
    procedure only uses what a controller could actually observe."""
    volts = []
    thetas = []
    for v in cfg.grid():
        if electrode == "a":
            cmd = StageVoltages(v_a=float(v), v_b=0.0, v_c=0.0, alpha=alpha)
        elif electrode == "c":
            cmd = StageVoltages(v_a=0.0, v_b=0.0, v_c=float(v), alpha=alpha)
        else:
            cmd = StageVoltages(v_a=float(v), v_b=0.0, v_c=float(v), alpha=alpha)
        try:
            realized = plant.apply(cmd)
        except DegenerateDrive:
            continue
        out = measure(realized.to_rotation().apply(np.asarray(probe, dtype=float)))
        fitted = solve_retarder(np.asarray(probe, dtype=float), out)
        delta = _delta_about_axis(alpha, fitted)
        if cfg.band_lo <= delta <= cfg.band_hi:
            volts.append(float(v))
            thetas.append(2.0 * math.pi * delta)
    return np.asarray(volts), np.asarray(thetas)


def _fit_line(volts: np.ndarray, thetas: np.ndarray, cfg: SweepConfig, label: str):
    if len(volts) < cfg.min_points:
        raise CalibrationFailed(
            f"{label}: only {len(volts)} usable sweep samples "
            f"(need {cfg.min_points}); probe may be an eigenmode of the axis"
        )
    slope, intercept = np.polyfit(volts, thetas, 1)
    resid = thetas - (slope * volts + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    if rms > cfg.fit_tol:
        raise CalibrationFailed(
            f"{label}: line-fit residual {rms:.3e} rad RMS exceeds {cfg.fit_tol}"
        )
    if slope == 0.0:
        raise CalibrationFailed(f"{label}: flat response, no observable rotation")
    return float(slope), float(intercept)


def calibrate_stage(
    plant: PcmStagePlant,
    probe: Vec3 = DEFAULT_PROBE,
    cfg: SweepConfig = SweepConfig(),
    measure: Optional[MeasureFn] = None,
) -> CalibrationParams:
    """Estimate the stage constants from three voltage sweeps.

    Sweep electrode A along alpha=0: only A drives that axis, and the
    realized angle grows as theta = 2*pi*(bias_a - v)/v_pi below the bias,
    so one line fit yields v_pi (slope) and bias_a (root).  Sweep electrode
    C along alpha=pi for bias_c the same way.  Sweep both electrodes
    together along alpha=pi/2, where theta = 2*pi*(v - mean_bias)/(2*v_0),
    for v_0.  Only in-band samples enter the fits; the clamped plateaus and
    wrapped phases outside carry no slope information.
    """
    if measure is None:
        measure = lambda s: s  # noqa: E731 - noiseless readback

    # alpha = 0: theta = (2*pi/v_pi)*(bias_a - v), slope -2*pi/v_pi
    va, ta = _sweep_thetas(plant, probe, 0.0, "a", cfg, measure)
    slope_a, icept_a = _fit_line(va, ta, cfg, "v_pi/bias_a sweep (alpha=0)")
    if slope_a >= 0.0:
        raise CalibrationFailed("alpha=0 sweep produced a non-negative slope")
    v_pi = -2.0 * math.pi / slope_a
    bias_a = -icept_a / slope_a

    # alpha = pi: theta = (2*pi/v_pi)*(v - bias_c), slope +2*pi/v_pi
    vc, tc = _sweep_thetas(plant, probe, math.pi, "c", cfg, measure)
    slope_c, icept_c = _fit_line(vc, tc, cfg, "bias_c sweep (alpha=pi)")
    if slope_c <= 0.0:
        raise CalibrationFailed("alpha=pi sweep produced a non-positive slope")
    bias_c = -icept_c / slope_c

    # alpha = pi/2 with both electrodes: theta = (pi/v_0)*(v - mean bias)
    vb, tb = _sweep_thetas(plant, probe, 0.5 * math.pi, "both", cfg, measure)
    slope_b, _ = _fit_line(vb, tb, cfg, "v_0 sweep (alpha=pi/2)")
    if slope_b <= 0.0:
        raise CalibrationFailed("alpha=pi/2 sweep produced a non-positive slope")
    v_0 = math.pi / slope_b

    try:
        return CalibrationParams(v_pi=v_pi, v_0=v_0, v_bias_a=bias_a, v_bias_c=bias_c)
    except ValueError as err:
        raise CalibrationFailed(f"fitted constants out of sane range: {err}") from err
