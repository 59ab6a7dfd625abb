#!/usr/bin/env python3
# Identify a hidden cell's constants from polarimeter readback alone,
# first on a clean channel, then through realistic SOP noise.

import numpy as np

from polcontrol import (
    CalibrationParams,
    PcmStagePlant,
    SweepConfig,
    calibrate_stage,
    noisy_measure,
)

truth = CalibrationParams(v_pi=83.0, v_0=31.5, v_bias_a=4.2, v_bias_c=-6.8)
plant = PcmStagePlant(truth)


def table(est):
    rows = [
        ("v_pi", truth.v_pi, est.v_pi),
        ("v_0", truth.v_0, est.v_0),
        ("v_bias_a", truth.v_bias_a, est.v_bias_a),
        ("v_bias_c", truth.v_bias_c, est.v_bias_c),
    ]
    for name, t, e in rows:
        print(f"  {name:9s} truth {t:+8.3f}   est {e:+8.3f}   rel {abs(e-t)/abs(t):.2e}")


print("noiseless sweep:")
table(calibrate_stage(plant))

print()
print("with 1e-3 rad SOP readback noise:")
rng = np.random.default_rng(3)
est = calibrate_stage(
    PcmStagePlant(truth),
    cfg=SweepConfig(fit_tol=2e-2),
    measure=noisy_measure(1e-3, rng),
)
table(est)
