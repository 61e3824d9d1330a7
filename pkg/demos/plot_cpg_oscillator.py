"""
A single CPG oscillator
=======================

With internal weight 1 and no coupling, an oscillator started at
(sqrt(2)/2, sqrt(2)/2) traces sin(t + pi/4). We compare the two integrators.
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from evolearn.brain import CpgNetwork, step_cpg

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

dt = 0.001
t = np.arange(1, int(math.ceil(2 * math.pi / dt)) + 1) * dt
fig, ax = plt.subplots()
for integrator in ("euler", "rk4"):
    net = CpgNetwork((0,), np.array([1.0]), (), integrator=integrator)
    x = np.empty_like(t)
    for k in range(len(t)):
        step_cpg(net, dt)
        x[k] = net.x[0]
    err = np.max(np.abs(x - np.sin(t + math.pi / 4)))
    print(f"{integrator}: max error over one period {err:.2e}")
    ax.plot(t, x - np.sin(t + math.pi / 4), label=integrator)

ax.set_xlabel("t [s]")
ax.set_ylabel("x - sin(t + pi/4)")
ax.legend()
fig.savefig(OUT / "oscillator_error.svg")
