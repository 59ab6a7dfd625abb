#!/usr/bin/env python3
"""Tour the six cardinal polarization states and watch the projection pane.

Solves the retarder that carries each state to the next, sweeps the
retardance to trace the arc, and drops everything onto the same isometric
pixel pane the service reports.  Writes sphere_tour.png next to this file.
"""

import os

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from polcontrol import (
    CARDINAL_STATES,
    LinearRetarder,
    PipelineConfig,
    isometric_project,
    pipeline,
    solve_retarder,
)

order = ["H", "D", "V", "A", "R", "L", "H"]
cfg = PipelineConfig(bits=12)

print("cardinal states on the pixel pane:")
for name in order[:-1]:
    res = pipeline(CARDINAL_STATES[name], cfg)
    print(f"  {name}: sop={np.round(res.sop, 3)}  px={res.point.px} py={res.point.py}")

# walk the tour, sweeping each hop's retardance from 0 to the solved value
trace = []
for a, b in zip(order[:-1], order[1:]):
    hop = solve_retarder(CARDINAL_STATES[a], CARDINAL_STATES[b])
    print(f"{a} -> {b}: alpha={hop.alpha:.4f} rad  delta={hop.delta:.4f}")
    for frac in np.linspace(0.0, 1.0, 40, endpoint=False):
        part = LinearRetarder(hop.alpha, frac * hop.delta)
        trace.append(part.to_rotation().apply(CARDINAL_STATES[a]))
trace.append(CARDINAL_STATES[order[-1]])
trace = np.array(trace)

uv = np.array([isometric_project(s) for s in trace])

fig, ax = plt.subplots(figsize=(5, 5))
ax.plot(uv[:, 0], uv[:, 1], lw=0.8, color="0.4")
for name in order[:-1]:
    u, v = isometric_project(CARDINAL_STATES[name])
    ax.plot(u, v, "o", ms=6)
    ax.annotate(name, (u, v), textcoords="offset points", xytext=(6, 4))
ax.set_aspect("equal")
ax.set_title("cardinal tour, isometric pane")
out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "sphere_tour.png")
fig.savefig(out, dpi=120)
print("wrote", out)
