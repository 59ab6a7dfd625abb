"""Polarization math on the unit sphere: Stokes vectors, rotations, retarders.

A fully polarized state of polarization (SOP) is a unit 3-vector obtained by
normalizing the last three Stokes components.  Intensity-preserving SOP
changes are 3-space rotations, carried here by unit quaternions.  A linear
retarder is the actuator primitive: a rotation about an axis in the equatorial
plane of the sphere, parametrized by the eigenmode azimuth ``alpha`` and the
retardance fraction ``delta`` (rotation angle ``2*pi*delta``).

Sign convention: rotations follow the right-hand rule about their axis.  All
functions in this module are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import NonPositiveIntensity, NonUnitAxis

Vec3 = NDArray[np.float64]

# Default tolerances; every public entry point takes them as arguments.
UNIT_TOL = 1e-9
DOP_MIN = 1e-6

# Below this equatorial separation the solver axis equation is satisfied by
# every azimuth and the tie-break rule applies.
_AXIS_DEGENERACY_TOL = 1e-12

_TWO_PI = 2.0 * math.pi


def sop(s1: float, s2: float, s3: float, tol: float = UNIT_TOL) -> Vec3:
    """Build a unit SOP vector, validating its norm against ``tol``."""
    v = np.array([s1, s2, s3], dtype=float)
    require_unit(v, tol=tol, what="SOP")
    return v


def require_unit(v: Vec3, tol: float = UNIT_TOL, what: str = "vector") -> None:
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > tol:
        raise ValueError(f"{what} must be unit norm, got |v| = {n!r}")


# The six cardinal states in the usual Stokes convention: horizontal,
# vertical, diagonal, antidiagonal, right and left circular.
CARDINAL_STATES: dict[str, Vec3] = {
    "H": np.array([1.0, 0.0, 0.0]),
    "V": np.array([-1.0, 0.0, 0.0]),
    "D": np.array([0.0, 1.0, 0.0]),
    "A": np.array([0.0, -1.0, 0.0]),
    "R": np.array([0.0, 0.0, 1.0]),
    "L": np.array([0.0, 0.0, -1.0]),
}
for _v in CARDINAL_STATES.values():
    _v.setflags(write=False)


@dataclass(frozen=True)
class StokesVector:
    """Raw 4-component light description, in arbitrary linear intensity units."""

    s0: float
    s1: float
    s2: float
    s3: float

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.s0, self.s1, self.s2, self.s3], dtype=float)

    def is_physical(self, tol: float = UNIT_TOL) -> bool:
        """True when the polarized part does not exceed the intensity.

        Quantized measurement chains can emit slightly super-physical
        vectors, so this is a predicate rather than a constructor check.
        """
        if self.s0 <= 0.0:
            return False
        part = math.sqrt(self.s1**2 + self.s2**2 + self.s3**2)
        return part <= self.s0 * (1.0 + tol)


class NormalizedSop(NamedTuple):
    """Result of :func:`normalize`.

    ``sop`` is ``None`` only when the polarized part vanishes exactly;
    ``depolarized`` flags a degree of polarization below the configured
    minimum, in which case the direction is reported but indeterminate.
    """

    sop: Optional[Vec3]
    dop: float
    depolarized: bool


def normalize(sv: StokesVector, dop_min: float = DOP_MIN) -> NormalizedSop:
    """Normalize a Stokes vector to a unit SOP and a degree of polarization.

    Parameters
    ----------
    sv : StokesVector
        Measured or synthesized light description with ``s0 > 0``.
    dop_min : float
        Degree-of-polarization floor below which the SOP direction is flagged
        indeterminate.

    Returns
    -------
    NormalizedSop
        Unit direction (or ``None`` for exactly unpolarized light), the
        degree of polarization ``|(s1, s2, s3)| / s0``, and the
        depolarization flag.

    Raises
    ------
    NonPositiveIntensity
        If ``sv.s0 <= 0``.
    """
    if sv.s0 <= 0.0:
        raise NonPositiveIntensity(f"s0 must be positive, got {sv.s0!r}")
    part = np.array([sv.s1, sv.s2, sv.s3], dtype=float)
    p = float(np.linalg.norm(part))
    dop = p / sv.s0
    if p == 0.0:
        return NormalizedSop(None, 0.0, True)
    return NormalizedSop(part / p, dop, dop < dop_min)


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion acting on SOPs by conjugation (right-hand rule)."""

    w: float
    x: float
    y: float
    z: float

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, theta: float, tol: float = UNIT_TOL) -> "Rotation":
        """Rotation by ``theta`` radians about a unit ``axis``.

        Raises
        ------
        NonUnitAxis
            If ``axis`` is not unit norm within ``tol``.
        """
        ax = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if abs(n - 1.0) > tol:
            raise NonUnitAxis(f"axis must be unit norm, got |axis| = {n!r}")
        half = 0.5 * theta
        s = math.sin(half)
        return Rotation(math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)

    def __mul__(self, other: "Rotation") -> "Rotation":
        """Hamilton product; ``(q2 * q1)`` applies ``q1`` first, then ``q2``."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Rotation(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 + y1 * w2 + z1 * x2 - x1 * z2,
            w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2,
        )

    def conjugate(self) -> "Rotation":
        """Inverse rotation (quaternion conjugate of a unit quaternion)."""
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Rotation":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero quaternion")
        return Rotation(self.w / n, self.x / n, self.y / n, self.z / n)

    def apply(self, s: Vec3) -> Vec3:
        """Rotate a 3-vector: ``v' = q v q*`` expanded to avoid temporaries."""
        w, qx, qy, qz = self.w, self.x, self.y, self.z
        vx, vy, vz = float(s[0]), float(s[1]), float(s[2])
        # t = 2 (u x v), v' = v + w t + u x t
        tx = 2.0 * (qy * vz - qz * vy)
        ty = 2.0 * (qz * vx - qx * vz)
        tz = 2.0 * (qx * vy - qy * vx)
        return np.array(
            [
                vx + w * tx + qy * tz - qz * ty,
                vy + w * ty + qz * tx - qx * tz,
                vz + w * tz + qx * ty - qy * tx,
            ]
        )

    def to_matrix(self) -> NDArray[np.float64]:
        """Equivalent orthonormal 3x3 matrix."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


@dataclass(frozen=True)
class LinearRetarder:
    """Wave-plate actuator: equatorial eigenmode azimuth and retardance fraction.

    ``alpha`` lives in ``[0, 2*pi)`` and fixes the eigenmode
    ``(cos(alpha/2), sin(alpha/2), 0)``; ``delta`` lives in ``[0, 1)`` and
    fixes the rotation angle ``2*pi*delta`` about that axis.
    """

    alpha: float
    delta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < _TWO_PI:
            raise ValueError(f"alpha must be in [0, 2*pi), got {self.alpha!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta!r}")

    def eigenmode(self) -> Vec3:
        half = 0.5 * self.alpha
        return np.array([math.cos(half), math.sin(half), 0.0])

    def rotation_angle(self) -> float:
        return _TWO_PI * self.delta

    def to_rotation(self) -> Rotation:
        """Rotation realized by this retarder on the sphere."""
        return Rotation.from_axis_angle(self.eigenmode(), self.rotation_angle())


def solve_retarder(current: Vec3, target: Vec3) -> LinearRetarder:
    """Find the linear retarder carrying ``current`` onto ``target``.

    An equatorial axis ``e = (cos(psi), sin(psi), 0)`` rotates ``current``
    onto ``target`` exactly when both share the same component along ``e``,
    i.e. ``cos(psi) * (c1 - t1) + sin(psi) * (c2 - t2) = 0``.  That equation
    always has a solution, so the solver is total.  The rotation angle is the
    signed angle between the projections of the two states onto the plane
    perpendicular to the chosen axis.

    Tie-breaks: ``psi`` is canonicalized into ``[0, pi)``.  When
    ``current - target`` is parallel to the polar axis every equatorial
    azimuth qualifies, and the solver deterministically picks the azimuth of
    the shared equatorial component ``current + target`` (falling back to 0
    when that vanishes too).  Equal states return the canonical identity
    retarder ``(alpha=0, delta=0)``.

    Parameters
    ----------
    current, target : array_like
        Unit SOP vectors.

    Returns
    -------
    LinearRetarder
        Retarder whose rotation maps ``current`` to ``target`` within
        1e-9 radians.
    """
    c = np.asarray(current, dtype=float)
    t = np.asarray(target, dtype=float)
    require_unit(c, what="current SOP")
    require_unit(t, what="target SOP")
    if c[0] == t[0] and c[1] == t[1] and c[2] == t[2]:
        return LinearRetarder(0.0, 0.0)

    d1 = c[0] - t[0]
    d2 = c[1] - t[1]
    if math.hypot(d1, d2) < _AXIS_DEGENERACY_TOL:
        # current - target is (numerically) polar: every equatorial axis
        # works, pick the one closest to the shared equatorial direction.
        u1 = c[0] + t[0]
        u2 = c[1] + t[1]
        psi = math.atan2(u2, u1) if math.hypot(u1, u2) >= _AXIS_DEGENERACY_TOL else 0.0
    else:
        psi = math.atan2(-d1, d2)
    psi %= math.pi

    e = np.array([math.cos(psi), math.sin(psi), 0.0])
    cp = c - float(e @ c) * e
    tp = t - float(e @ t) * e
    if np.linalg.norm(cp) < _AXIS_DEGENERACY_TOL or np.linalg.norm(tp) < _AXIS_DEGENERACY_TOL:
        # Both states coincide with the axis itself; nothing to rotate.
        return LinearRetarder((2.0 * psi) % _TWO_PI, 0.0)
    cross = np.cross(cp, tp)
    theta = math.atan2(float(e @ cross), float(cp @ tp))
    delta = (theta / _TWO_PI) % 1.0
    if delta >= 1.0:
        # float modulo of a tiny negative angle rounds up to exactly 1.0
        delta = 0.0
    return LinearRetarder((2.0 * psi) % _TWO_PI, delta)


def misalignment(a: Vec3, b: Vec3) -> float:
    """Great-circle angle between two unit SOPs, in ``[0, pi]`` radians."""
    d = float(np.dot(a, b))
    return math.acos(max(-1.0, min(1.0, d)))
