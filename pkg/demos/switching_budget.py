#!/usr/bin/env python3
# How fast can the cell actually switch?  Walk the three amplifier profiles
# through the full-swing budget, then watch a slew-limited step land.

import numpy as np

from polcontrol import (
    DEFAULT_CALIBRATION,
    PROFILES,
    DriverState,
    LinearRetarder,
    max_switch_rate,
    retarder_to_voltages,
    split_stages,
    transition_time,
)
from polcontrol.driver import command, step

print("full-swing (140 V) switching budget")
print("profile   gain  slew V/us   rate")
for name, prof in PROFILES.items():
    rate = max_switch_rate(140.0, prof)
    print(f"{name:8s}  {prof.gain:4.0f}  {prof.slew_rate:9.3g}   {rate/1e3:.4g} kHz")

cal = DEFAULT_CALIBRATION
print()
print("half-wave plate about the 30 degree axis, one stage:")
ret = LinearRetarder(np.deg2rad(2 * 30), 0.5)
sv = retarder_to_voltages(ret, cal)
print(f"  v_a={sv.v_a:+.2f}  v_b={sv.v_b:+.2f}  v_c={sv.v_c:+.2f}")

# a near-full-wave request about the horizontal axis overflows one stage's
# rail; the splitter shares it out and parks the leftover stage at bias
print("0.999-wave retardance about alpha=0 shared across three stages:")
big = LinearRetarder(0.0, 0.999)
for k, stage in enumerate(split_stages(big, [cal] * 3).stages):
    print(f"  stage{k+1}: alpha={stage.alpha:.4f}  v_a={stage.v_a:+.2f}  v_c={stage.v_c:+.2f}")

# step response: command the half-wave voltage and count microseconds to land
prof = PROFILES["gain14"]
drv = DriverState()
command(drv, sv.v_a / (prof.gain * prof.pre_amp_gain), prof)
ticks = 0
while drv.v_out != drv.v_cmd:
    step(drv, 1.0, prof)
    ticks += 1
analytic = transition_time(0.0, sv.v_a, prof).full
print(f"gain14 step to {sv.v_a:+.1f} V lands in {ticks} us "
      f"(analytic ramp {analytic:.1f} us at {prof.slew_rate} V/us)")
