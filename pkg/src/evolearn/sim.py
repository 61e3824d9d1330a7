"""Deterministic planar surrogate for locomotion.

This is not rigid-body physics. Each control tick, the change in every joint's
output produces forward motion proportional to total actuation, and turning
proportional to the right/left imbalance of squared actuation (right = positive
body-frame grid x, so an active right side turns the robot counter-clockwise).
The robot faces +y at yaw 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .brain import CpgNetwork
from .morphology import BodyPhenotype, joint_grid_2d

SAMPLE_RATE = 5
CONTROL_DT = 0.05
TICKS_PER_SAMPLE = 4
TRAJECTORY_COLUMNS = ("t", "x", "y", "yaw", "qw", "qx", "qy", "qz")

# steering(pose) -> (right_scale, left_scale): factors on the actuation change of
# joints with positive / negative body-frame grid x; centre-line joints are never scaled
SteeringHook = Callable[["Pose"], tuple[float, float]]


@dataclass(frozen=True)
class SimParams:
    forward_gain: float = 0.05  # metres per unit of summed |delta out|
    turn_gain: float = 0.5  # rad/s per unit of squared-actuation imbalance
    cpg_dt: float = 0.001
    control_dt: float = CONTROL_DT


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def heading(self) -> np.ndarray:
        return np.array([-math.sin(self.yaw), math.cos(self.yaw)])

    @property
    def quaternion(self) -> np.ndarray:
        return yaw_to_quaternion(self.yaw)


def yaw_to_quaternion(yaw):
    """``(w, x, y, z)`` for a rotation of ``yaw`` about the vertical axis. Vectorised."""
    yaw = np.asarray(yaw, dtype=float)
    zero = np.zeros_like(yaw)
    return np.stack([np.cos(yaw / 2), zero, zero, np.sin(yaw / 2)], axis=-1)


def quaternion_to_yaw(q):
    q = np.asarray(q, dtype=float)
    return 2.0 * np.arctan2(q[..., 3], q[..., 0])


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @property
    def quaternions(self) -> np.ndarray:
        return yaw_to_quaternion(self.yaw)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self.t) else 0.0

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]], yaw=None, rate: float = SAMPLE_RATE) -> "Trajectory":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        n = len(pts)
        yaw = np.zeros(n) if yaw is None else np.asarray(yaw, dtype=float)
        return cls(np.arange(n) / rate, pts[:, 0].copy(), pts[:, 1].copy(), yaw)

    def to_csv(self, path) -> None:
        q = self.quaternions
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_COLUMNS)
            for k in range(len(self)):
                w.writerow([repr(float(v)) for v in (self.t[k], self.x[k], self.y[k], self.yaw[k], *q[k])])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if rows:
            missing = [c for c in TRAJECTORY_COLUMNS if c not in rows[0]]
            if missing:
                raise ValueError(f"{path}: trajectory CSV lacks columns {missing}")
        col = lambda name: np.array([float(r[name]) for r in rows])
        return cls(col("t"), col("x"), col("y"), col("yaw"))


def surrogate_step(
    pose: Pose, grid_x: np.ndarray, delta_out: np.ndarray, dt: float, params: SimParams = SimParams()
) -> Pose:
    """Advance the pose by one control tick given each joint's change in output."""
    grid_x = np.asarray(grid_x)
    delta_out = np.asarray(delta_out, dtype=float)
    drive = params.forward_gain * float(np.sum(np.abs(delta_out)))
    sq = delta_out * delta_out
    turn = params.turn_gain * (float(np.sum(sq[grid_x > 0])) - float(np.sum(sq[grid_x < 0])))
    return Pose(
        pose.x - drive * math.sin(pose.yaw),
        pose.y + drive * math.cos(pose.yaw),
        pose.yaw + turn * dt,
    )


def simulate(
    body: BodyPhenotype,
    controller: CpgNetwork,
    duration: float,
    steering: SteeringHook | None = None,
    params: SimParams = SimParams(),
) -> Trajectory:
    """Run the controller on the body for ``duration`` seconds; sample the pose at 5 Hz.

    ``controller`` is consumed (its oscillator state advances).
    """
    n_samples = int(round(duration * SAMPLE_RATE))
    if not math.isclose(n_samples / SAMPLE_RATE, duration, rel_tol=1e-9, abs_tol=1e-12) or n_samples < 0:
        raise ValueError(f"duration {duration} is not a whole number of 0.2 s samples")
    ticks_per_sample = int(round(1.0 / (SAMPLE_RATE * params.control_dt)))
    n_ticks = n_samples * ticks_per_sample
    grid_x = np.array([c.coord[0] for c in joint_grid_2d(body)], dtype=int)
    if controller.size != len(grid_x):
        raise ValueError("controller and body disagree on the number of joints")

    outs = controller.rollout(n_ticks, params.control_dt, params.cpg_dt)
    deltas = np.diff(outs, axis=0)

    if steering is None:
        x, y, yaw = _open_loop(grid_x, deltas, params)
    else:
        x, y, yaw = _closed_loop(grid_x, deltas, steering, params)
    bad = ~(np.isfinite(x) & np.isfinite(y) & np.isfinite(yaw))
    if bad.any():
        raise FloatingPointError(f"surrogate dynamics became non-finite at tick {int(np.argmax(bad))}")
    sel = slice(0, n_ticks + 1, ticks_per_sample)
    return Trajectory(np.arange(n_samples + 1) / SAMPLE_RATE, x[sel], y[sel], yaw[sel])


def _open_loop(grid_x, deltas, params):
    """Vectorised integration when no feedback alters the actuation."""
    n_ticks = len(deltas)
    drive = params.forward_gain * np.abs(deltas).sum(axis=1)
    sq = deltas * deltas
    turn = params.turn_gain * (sq[:, grid_x > 0].sum(axis=1) - sq[:, grid_x < 0].sum(axis=1))
    yaw = np.zeros(n_ticks + 1)
    yaw[1:] = np.cumsum(turn * params.control_dt)
    # position moves along the pre-step heading
    dx = -drive * np.sin(yaw[:-1])
    dy = drive * np.cos(yaw[:-1])
    x = np.concatenate([[0.0], np.cumsum(dx)])
    y = np.concatenate([[0.0], np.cumsum(dy)])
    return x, y, yaw


def _closed_loop(grid_x, deltas, steering, params):
    n_ticks = len(deltas)
    absd, sq = np.abs(deltas), deltas * deltas
    right, left = grid_x > 0, grid_x < 0
    abs_r = absd[:, right].sum(axis=1).tolist()
    abs_l = absd[:, left].sum(axis=1).tolist()
    abs_c = absd[:, ~(right | left)].sum(axis=1).tolist()
    sq_r = sq[:, right].sum(axis=1).tolist()
    sq_l = sq[:, left].sum(axis=1).tolist()
    cf, ct, dt = params.forward_gain, params.turn_gain, params.control_dt
    x = np.zeros(n_ticks + 1)
    y = np.zeros(n_ticks + 1)
    yaw = np.zeros(n_ticks + 1)
    px = py = pyaw = 0.0
    for k in range(n_ticks):
        sr, sl = steering(Pose(px, py, pyaw))
        drive = cf * (sr * abs_r[k] + sl * abs_l[k] + abs_c[k])
        turn = ct * (sr * sr * sq_r[k] - sl * sl * sq_l[k])
        px -= drive * math.sin(pyaw)
        py += drive * math.cos(pyaw)
        pyaw += turn * dt
        x[k + 1], y[k + 1], yaw[k + 1] = px, py, pyaw
    return x, y, yaw
