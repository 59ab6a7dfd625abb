"""Behavioral model of the +/-70 V electrode driver: DAC reconstruction,
gain and saturation, slew-rate-limited transitions, switching-rate analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import CodeOutOfRange, UnknownProfile


@dataclass(frozen=True)
class DriverProfile:
    """One operating point of the output stage.

    ``pole_tau_us`` is an optional single-pole response hook; zero keeps the
    pure slew-rate ramp, which is what the timing figures are built on.
    """

    name: str
    gain: float
    slew_rate: float  # V/us
    supply: float = 70.0
    settle_band: float = 0.01
    pre_amp_gain: float = 1.0
    pole_tau_us: float = 0.0

    def __post_init__(self) -> None:
        if self.gain * self.pre_amp_gain <= 0.0:
            raise ValueError("total gain must be positive")
        if self.slew_rate <= 0.0:
            raise ValueError("slew_rate must be positive")
        if self.supply <= 0.0:
            raise ValueError("supply must be positive")


# Slew rates chosen so the model lands on the three published switching
# figures: 125 kHz full-range, 8 kHz at gain 14, 1 MHz at gain 5 behind a
# gain-3 preamplifier.
PROFILES: dict[str, DriverProfile] = {
    "default": DriverProfile(name="default", gain=14.0, slew_rate=17.5),
    "gain14": DriverProfile(name="gain14", gain=14.0, slew_rate=1.12),
    "gain5": DriverProfile(name="gain5", gain=5.0, slew_rate=140.0, pre_amp_gain=3.0),
}


def get_profile(name: str) -> DriverProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise UnknownProfile(
            f"no driver profile {name!r}; known: {', '.join(sorted(PROFILES))}"
        ) from None


@dataclass(frozen=True)
class DacConfig:
    bits: int = 12
    v_ref: float = 5.0

    def __post_init__(self) -> None:
        if not 8 <= self.bits <= 16:
            raise ValueError(f"bits must be in [8, 16], got {self.bits}")


def dac_out(code: int, cfg: DacConfig = DacConfig()) -> float:
    top = (1 << cfg.bits) - 1
    if not 0 <= code <= top:
        raise CodeOutOfRange(f"code {code} outside [0, {top}]")
    return code * cfg.v_ref / top


@dataclass
class DriverState:
    """Mutable output-stage state, owned by exactly one loop context."""

    v_out: float = 0.0
    v_cmd: float = 0.0


def command(state: DriverState, dac_v: float, profile: DriverProfile) -> DriverState:
    """Latch a new target: input voltage through the gain chain, saturated
    at the supply rails."""
    raw = dac_v * profile.pre_amp_gain * profile.gain
    state.v_cmd = min(max(raw, -profile.supply), profile.supply)
    return state


def step(state: DriverState, dt: float, profile: DriverProfile) -> DriverState:
    """Advance the output by ``dt`` microseconds toward the latched target.

    The output ramps at the profile slew rate and lands exactly once within
    one step of the target; it never overshoots.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    delta = state.v_cmd - state.v_out
    if delta == 0.0:
        return state
    if profile.pole_tau_us > 0.0:
        # optional lag: exponential approach still bounded by the slew ramp
        frac = 1.0 - math.exp(-dt / profile.pole_tau_us)
        want = delta * frac
    else:
        want = delta
    limit = profile.slew_rate * dt
    moved = min(max(want, -limit), limit)
    state.v_out += moved
    # crossing within one ramp step counts as landed
    if abs(state.v_cmd - state.v_out) <= 1e-12 * max(1.0, abs(state.v_cmd)):
        state.v_out = state.v_cmd
    return state


class TransitionTime(NamedTuple):
    settle: float  # us to enter the settle band
    full: float  # us for the complete ramp


def transition_time(v_from: float, v_to: float, profile: DriverProfile) -> TransitionTime:
    """Analytic ramp timing between two levels inside the supply window."""
    for v in (v_from, v_to):
        if abs(v) > profile.supply:
            raise ValueError(f"{v} V outside the +/-{profile.supply} V supply")
    dv = abs(v_to - v_from)
    full = dv / profile.slew_rate
    settle = dv * (1.0 - profile.settle_band) / profile.slew_rate
    return TransitionTime(settle=settle, full=full)


def max_switch_rate(swing: float, profile: DriverProfile) -> float:
    """Highest level-toggling rate in Hz for a symmetric swing, defined as
    the reciprocal of the full ramp time.  Zero swing reports infinity."""
    if swing < 0.0 or swing > 2.0 * profile.supply:
        raise ValueError(f"swing {swing} V outside [0, {2 * profile.supply}] V")
    if swing == 0.0:
        return math.inf
    full_us = transition_time(-swing / 2.0, swing / 2.0, profile).full
    return 1e6 / full_us


def rate_table(profile: DriverProfile, swings=(0.0, 10.0, 70.0, 140.0)):
    """(profile, swing V, full transition us, max rate Hz) rows for reports."""
    rows = []
    for swing in swings:
        if swing == 0.0:
            rows.append((profile.name, swing, 0.0, math.inf))
        else:
            t = transition_time(-swing / 2.0, swing / 2.0, profile)
            rows.append((profile.name, swing, t.full, max_switch_rate(swing, profile)))
    return rows
