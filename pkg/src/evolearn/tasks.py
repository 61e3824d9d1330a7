"""Point navigation and panoramic rotation: steering rule, fitness functions, and
task objects that turn a (body, brain) pair into a scalar score."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .brain import build_cpg_network
from .morphology import BodyPhenotype
from .sim import Pose, SimParams, Trajectory, simulate

QUATERNION_TOLERANCE = 1e-6


def signed_angle(u, v) -> float:
    """Angle from 2D vector ``u`` to ``v`` in (-pi, pi], counter-clockwise positive."""
    cross = u[0] * v[1] - u[1] * v[0]
    dot = u[0] * v[0] + u[1] * v[1]
    return math.atan2(cross, dot)


def _side_scales(pose: Pose, target, gain: float) -> tuple[float, float]:
    """``(right, left)`` actuation scales: the side the target lies on is slowed
    in proportion to the bearing."""
    to_target = (target[0] - pose.x, target[1] - pose.y)
    bearing = signed_angle((-math.sin(pose.yaw), math.cos(pose.yaw)), to_target)
    slowed = min(1.0, max(0.0, 1.0 - abs(bearing) / math.pi * gain))
    if bearing < 0:
        return slowed, 1.0
    if bearing > 0:
        return 1.0, slowed
    return 1.0, 1.0


def steering_scale(pose: Pose, next_target, joint_grid_x: int, gain: float = 1.0) -> float:
    """Actuation scale in [0, 1] for one joint given its body-frame grid x."""
    right, left = _side_scales(pose, next_target, gain)
    if joint_grid_x > 0:
        return right
    if joint_grid_x < 0:
        return left
    return 1.0


def _targets_reached(positions: np.ndarray, targets: np.ndarray, radius: float) -> int:
    k = 0
    for p in positions:
        while k < len(targets) and math.dist(p, targets[k]) <= radius:
            k += 1
        if k == len(targets):
            break
    return k


def path_length(positions: np.ndarray) -> float:
    if len(positions) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))


@dataclass(frozen=True)
class PointNavTask:
    targets: tuple[tuple[float, float], ...] = ((1.0, -1.0), (0.0, -2.0))
    reach_radius: float = 0.01
    omega: float = 0.1
    duration: float = 40.0
    steering_gain: float = 1.0
    name: str = field(default="point_nav", init=False)

    def __post_init__(self):
        if not self.targets:
            raise ValueError("point navigation needs at least one target")
        if self.reach_radius <= 0:
            raise ValueError("reach_radius must be positive")

    def fitness(self, traj: Trajectory) -> float:
        return fitness_point_navigation(traj, self)

    def steering(self):
        """Closed-loop steering hook for :func:`~evolearn.sim.simulate`."""
        targets = [tuple(t) for t in self.targets]
        state = {"next": 0}

        def hook(pose: Pose) -> tuple[float, float]:
            while state["next"] < len(targets) and math.dist((pose.x, pose.y), targets[state["next"]]) <= self.reach_radius:
                state["next"] += 1
            if state["next"] >= len(targets):
                return 1.0, 1.0
            target = targets[state["next"]]
            return _side_scales(pose, target, self.steering_gain)

        return hook

    def run(self, body: BodyPhenotype, brain: np.ndarray, sim: SimParams = SimParams()) -> Trajectory:
        return simulate(body, build_cpg_network(body, brain), self.duration, steering=self.steering(), params=sim)


def fitness_point_navigation(traj: Trajectory, task: PointNavTask = PointNavTask()) -> float:
    """Credit for each target reached in order, plus progress toward the next
    one, minus ``omega`` times the path length."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    pos = traj.positions
    pts = np.vstack([[0.0, 0.0], np.asarray(task.targets, dtype=float)])
    n = len(pts) - 1
    k = _targets_reached(pos, pts[1:], task.reach_radius)
    reached = sum(math.dist(pts[i], pts[i - 1]) for i in range(1, k + 1))
    progress = 0.0
    if k < n:
        progress = math.dist(pts[k + 1], pts[k]) - math.dist(pos[-1], pts[k + 1])
    return reached + progress - task.omega * path_length(pos)


@dataclass(frozen=True)
class RotationTask:
    duration: float = 30.0
    name: str = field(default="rotation", init=False)

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    def fitness(self, traj: Trajectory) -> float:
        return fitness_rotation(traj)

    def run(self, body: BodyPhenotype, brain: np.ndarray, sim: SimParams = SimParams()) -> Trajectory:
        return simulate(body, build_cpg_network(body, brain), self.duration, params=sim)


def _rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector ``v`` by each unit quaternion in ``q`` (``(w, x, y, z)`` rows)."""
    w, u = q[:, :1], q[:, 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def fitness_rotation(traj: Trajectory | np.ndarray) -> float:
    """Total signed rotation about the vertical axis, counter-clockwise positive.

    Accepts a trajectory or an ``(n, 4)`` array of ``(w, x, y, z)`` quaternions.
    Each sample's forward vector is projected to the ground plane and the signed
    angles between consecutive vectors are summed.
    """
    q = traj.quaternions if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if q.ndim != 2 or q.shape[1] != 4 or len(q) < 2:
        raise ValueError("need at least two (w, x, y, z) quaternions")
    norms = np.linalg.norm(q, axis=1)
    if np.any(np.abs(norms - 1.0) > QUATERNION_TOLERANCE):
        raise ValueError("orientation samples must be unit quaternions")
    fwd = _rotate(q, np.array([0.0, 1.0, 0.0]))[:, :2]
    a, b = fwd[:-1], fwd[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.einsum("ij,ij->i", a, b)
    return float(np.sum(np.arctan2(cross, dot)))


def make_task(name: str, **overrides):
    if name == "point_nav":
        if "targets" in overrides:
            overrides["targets"] = tuple(tuple(float(c) for c in t) for t in overrides["targets"])
        return PointNavTask(**overrides)
    if name == "rotation":
        return RotationTask(**overrides)
    raise ValueError(f"unknown task {name!r}")
