"""Polarimeter signal chain: detector front-end, ADC, and the block
sequence turning raw codes into a normalized SOP plus display pixels.

Channel order is fixed everywhere: (total, rectilinear, diagonal, circular).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .core import DOP_MIN, NormalizedSop, StokesVector, Vec3, normalize
from .errors import CodeOutOfRange, SingularCalibration

Vec4 = NDArray[np.float64]

CHANNEL_NAMES = ("total", "rectilinear", "diagonal", "circular")


@dataclass(frozen=True)
class DetectorVoltages:
    v: Vec4  # volts, clamped to [0, v_ref] by the front end

    def __post_init__(self) -> None:
        arr = np.asarray(self.v, dtype=float)
        if arr.shape != (4,):
            raise ValueError(f"expected 4 detector channels, got shape {arr.shape}")
        object.__setattr__(self, "v", arr)


def front_end(
    s: Vec3,
    intensity: float,
    noise_sigma: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    responsivity: float = 1.0,
    v_ref: float = 5.0,
) -> DetectorVoltages:
    """Project an SOP onto the three measurement bases plus a total channel.

    Ideal channel intensities are I_k = intensity*(1+s_k)/2 with the total
    channel at full intensity; each becomes responsivity*I volts plus
    additive Gaussian noise, saturating at the rails.
    """
    if intensity <= 0.0:
        raise ValueError(f"intensity must be positive, got {intensity!r}")
    s = np.asarray(s, dtype=float)
    ideal = intensity * np.array(
        [1.0, 0.5 * (1.0 + s[0]), 0.5 * (1.0 + s[1]), 0.5 * (1.0 + s[2])]
    )
    v = responsivity * ideal
    if noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng")
        v = v + rng.normal(0.0, noise_sigma, size=4)
    return DetectorVoltages(np.clip(v, 0.0, v_ref))


@dataclass(frozen=True)
class AdcFrame:
    codes: tuple[int, int, int, int]
    bits: int
    v_ref: float

    def __post_init__(self) -> None:
        top = (1 << self.bits) - 1
        for c in self.codes:
            if not 0 <= c <= top:
                raise CodeOutOfRange(f"code {c} outside [0, {top}] at {self.bits} bits")


def adc_sample(dv: DetectorVoltages, bits: int = 12, v_ref: float = 5.0) -> AdcFrame:
    """Mid-tread quantizer, ties to even, saturating outside [0, v_ref]."""
    if not 8 <= bits <= 16:
        raise ValueError(f"bits must be in [8, 16], got {bits}")
    top = (1 << bits) - 1
    scaled = np.clip(dv.v, 0.0, v_ref) / v_ref * top
    codes = tuple(int(c) for c in np.rint(scaled))
    return AdcFrame(codes=codes, bits=bits, v_ref=v_ref)


def codes_to_volts(f: AdcFrame) -> Vec4:
    """Reconstruct voltages from integer codes (the codes enter as ints and
    leave as floats; no separate conversion step exists in software)."""
    top = (1 << f.bits) - 1
    return np.asarray(f.codes, dtype=float) * (f.v_ref / top)


class CalibrationMatrix:
    """Volts -> unnormalized Stokes map; rejected when near-singular."""

    def __init__(self, m: NDArray[np.float64]) -> None:
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"calibration matrix must be 4x4, got {m.shape}")
        cond = float(np.linalg.cond(m))
        if not math.isfinite(cond) or cond >= 1e6:
            raise SingularCalibration(f"condition number {cond:.3e} >= 1e6")
        self.m = m
        self.cond = cond


def ideal_calibration_matrix(responsivity: float = 1.0) -> CalibrationMatrix:
    # exact inverse of the ideal front-end map:
    #   v = r * (S0, (S0+S1)/2, (S0+S2)/2, (S0+S3)/2)
    base = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [-1.0, 2.0, 0.0, 0.0],
            [-1.0, 0.0, 2.0, 0.0],
            [-1.0, 0.0, 0.0, 2.0],
        ]
    )
    return CalibrationMatrix(base / responsivity)


def volts_to_stokes(v: Vec4, cm: CalibrationMatrix) -> StokesVector:
    s = cm.m @ np.asarray(v, dtype=float)
    return StokesVector(float(s[0]), float(s[1]), float(s[2]), float(s[3]))


# Standard isometric axonometry: equal foreshortening for s1 and s2, the
# circular component drawn straight up.
ISOMETRIC_MATRIX = np.array(
    [
        [math.sqrt(3.0) / 2.0, -math.sqrt(3.0) / 2.0, 0.0],
        [0.5, 0.5, 1.0],
    ]
)


def isometric_project(s: Vec3) -> tuple[float, float]:
    uv = ISOMETRIC_MATRIX @ np.asarray(s, dtype=float)
    return float(uv[0]), float(uv[1])


@dataclass(frozen=True)
class ScreenConfig:
    width: int = 640
    height: int = 480
    scale: float = 100.0
    offset_x: float = 320.0
    offset_y: float = 240.0


@dataclass(frozen=True)
class DisplayPoint:
    px: int
    py: int
    in_bounds: bool


def to_pixels(uv: tuple[float, float], screen: ScreenConfig = ScreenConfig()) -> DisplayPoint:
    """Map projected coordinates onto the display grid; screen y grows
    downward.  Out-of-screen points keep their coordinates, flagged."""
    if screen.width <= 0 or screen.height <= 0:
        raise ValueError("screen dimensions must be positive")
    px = int(np.rint(screen.scale * uv[0] + screen.offset_x))
    py = int(np.rint(-screen.scale * uv[1] + screen.offset_y))
    in_bounds = 0 <= px < screen.width and 0 <= py < screen.height
    return DisplayPoint(px=px, py=py, in_bounds=in_bounds)


@dataclass(frozen=True)
class PipelineConfig:
    """Full measurement chain settings.

    ``bits=None`` bypasses quantization entirely (an ideal readback for
    studies that must not carry an ADC floor); any int in [8, 16] engages
    the converter.
    """

    intensity: float = 1.0
    responsivity: float = 5.0
    noise_sigma: float = 0.0
    bits: Optional[int] = 12
    v_ref: float = 5.0
    dop_min: float = DOP_MIN
    screen: ScreenConfig = field(default_factory=ScreenConfig)
    matrix: Optional[CalibrationMatrix] = None

    def calibration(self) -> CalibrationMatrix:
        if self.matrix is not None:
            return self.matrix
        return ideal_calibration_matrix(self.responsivity)


@dataclass(frozen=True)
class PipelineResult:
    sop: Optional[Vec3]
    dop: float
    depolarized: bool
    point: Optional[DisplayPoint]
    stokes: StokesVector
    volts: Vec4
    codes: Optional[tuple[int, int, int, int]]


def pipeline(
    s: Vec3, cfg: PipelineConfig = PipelineConfig(), rng: Optional[np.random.Generator] = None
) -> PipelineResult:
    """Run the whole chain: front end, converter, calibration matrix,
    normalization, projection, pixel mapping."""
    dv = front_end(
        s,
        intensity=cfg.intensity,
        noise_sigma=cfg.noise_sigma,
        rng=rng,
        responsivity=cfg.responsivity,
        v_ref=cfg.v_ref,
    )
    if cfg.bits is None:
        codes = None
        volts = dv.v
    else:
        frame = adc_sample(dv, bits=cfg.bits, v_ref=cfg.v_ref)
        codes = frame.codes
        volts = codes_to_volts(frame)
    stokes = volts_to_stokes(volts, cfg.calibration())
    norm: NormalizedSop = normalize(stokes, dop_min=cfg.dop_min)
    if norm.sop is None:
        return PipelineResult(None, norm.dop, True, None, stokes, volts, codes)
    point = to_pixels(isometric_project(norm.sop), cfg.screen)
    return PipelineResult(norm.sop, norm.dop, norm.depolarized, point, stokes, volts, codes)


TRACE_HEADER = (
    "tick,code_total,code_rect,code_diag,code_circ,"
    "v_total,v_rect,v_diag,v_circ,S0,S1,S2,S3,s1,s2,s3,dop,px,py"
)


def trace_row(tick: int, res: PipelineResult) -> str:
    """One CSV row per measurement, matching TRACE_HEADER."""
    codes = res.codes if res.codes is not None else ("", "", "", "")
    sop = res.sop if res.sop is not None else (math.nan, math.nan, math.nan)
    px = res.point.px if res.point is not None else ""
    py = res.point.py if res.point is not None else ""
    cells = [
        str(tick),
        *[str(c) for c in codes],
        *[f"{v:.9g}" for v in res.volts],
        *[f"{getattr(res.stokes, k):.9g}" for k in ("s0", "s1", "s2", "s3")],
        *[f"{x:.9g}" for x in sop],
        f"{res.dop:.9g}",
        str(px),
        str(py),
    ]
    return ",".join(cells)
