"""
Scoring trajectories
====================

Point navigation rewards reaching the targets in order and penalises path
length; rotation sums the signed turning between 5 Hz samples.
"""

import math
from pathlib import Path

import numpy as np

from evolearn.brain import random_brain
from evolearn.morphology import grow_body
from evolearn.plotting import trajectory_plot
from evolearn.sim import Trajectory
from evolearn.tasks import PointNavTask, RotationTask, fitness_point_navigation, fitness_rotation

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

# the ideal path through both targets: sqrt(2) + sqrt(2) - 0.1 * 2 sqrt(2)
leg = np.linspace(0, 1, 21)
path = [(s, -s) for s in leg] + [(1 - s, -1 - s) for s in leg[1:]]
print("ideal point-navigation fitness:", round(fitness_point_navigation(Trajectory.from_points(path)), 4))

# two counter-clockwise revolutions
yaw = np.linspace(0, 4 * math.pi, 151)
print("rotation of a 2-turn spin:", fitness_rotation(Trajectory.from_points(np.zeros((151, 2)), yaw=yaw)))


# a robot with four hinges around the core, driven by a random brain
def plus(q):
    hinge = tuple(int(v) for v in q[:3]) in {(0, 1, 0), (0, -1, 0), (1, 0, 0), (-1, 0, 0)}
    return [0, 1, 0, 1, 0] if hinge else [0, 0, 1, 1, 0]


body = grow_body(plus)
brain = random_brain(np.random.default_rng(1))
nav, rot = PointNavTask(), RotationTask()
traj = nav.run(body, brain)
print("point navigation:", round(nav.fitness(traj), 3), "rotation:", round(rot.fitness(rot.run(body, brain)), 3))
trajectory_plot([traj], OUT / "plus_trajectory.svg", targets=nav.targets)
