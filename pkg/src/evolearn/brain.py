"""CPG brains: the 440x14 weight genotype, its lookup maps, and the oscillator network.

Each active hinge drives one oscillator with state ``(x, y)``::

    dx_i/dt = w_i * y_i + sum_j a_ij * x_j
    dy_i/dt = -w_i * x_i
    out_i   = tanh(x_i)

where ``a`` is antisymmetric and only couples joints at tree distance <= 2.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .morphology import GRID_LIMIT, BodyPhenotype, joint_grid_2d, tree_distance

GRID_SIDE = 2 * GRID_LIMIT + 1
GENOTYPE_ROWS = GRID_SIDE * GRID_SIDE - 1  # 440: every cell but the core's
GENOTYPE_COLS = 14
GENOTYPE_SHAPE = (GENOTYPE_ROWS, GENOTYPE_COLS)
INTERNAL_COLUMN = 0
STACKED_COLUMN = 13
NEIGHBOUR_RADIUS = 2
NEIGHBOUR_OFFSETS = tuple(
    sorted(
        (dx, dy)
        for dx in range(-NEIGHBOUR_RADIUS, NEIGHBOUR_RADIUS + 1)
        for dy in range(-NEIGHBOUR_RADIUS, NEIGHBOUR_RADIUS + 1)
        if 0 < abs(dx) + abs(dy) <= NEIGHBOUR_RADIUS
    )
)
_OFFSET_COLUMN = {off: i + 1 for i, off in enumerate(NEIGHBOUR_OFFSETS)}

INITIAL_STATE = math.sqrt(2) / 2
MAX_DT = 0.01
GENOTYPE_HEADER = "# evolearn.brain/1 shape=440x14"


def joint_gene_row(coord) -> int:
    """Genotype row holding the weights of a joint at 2D grid cell ``coord``."""
    x, y = (int(v) for v in coord)
    if abs(x) > GRID_LIMIT or abs(y) > GRID_LIMIT:
        raise ValueError(f"joint coordinate {coord} outside the {GRID_SIDE}x{GRID_SIDE} grid")
    if x == 0 and y == 0:
        raise ValueError("the grid centre belongs to the core and holds no joint")
    raw = (x + GRID_LIMIT) * GRID_SIDE + (y + GRID_LIMIT)
    centre = GRID_LIMIT * GRID_SIDE + GRID_LIMIT
    return raw if raw < centre else raw - 1


def neighbour_column(offset, stacked: bool = False) -> int:
    dx, dy = (int(v) for v in offset)
    if stacked:
        if (dx, dy) != (0, 0):
            raise ValueError("a stacked connection must have offset (0, 0)")
        return STACKED_COLUMN
    if (dx, dy) == (0, 0):
        return INTERNAL_COLUMN
    try:
        return _OFFSET_COLUMN[(dx, dy)]
    except KeyError:
        raise ValueError(f"offset {offset} outside the radius-{NEIGHBOUR_RADIUS} neighbourhood") from None


def random_brain(rng: np.random.Generator, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    return rng.uniform(low, high, size=GENOTYPE_SHAPE)


def check_genotype(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != GENOTYPE_SHAPE:
        raise ValueError(f"brain genotype must have shape {GENOTYPE_SHAPE}, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("brain genotype has non-finite entries")
    return g


def uniform_crossover_brain(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    a, b = check_genotype(a), check_genotype(b)
    take_a = rng.random(GENOTYPE_SHAPE) < 0.5
    return np.where(take_a, a, b)


def gaussian_mutate_brain(
    g: np.ndarray, rng: np.random.Generator, prob: float = 0.8, sigma: float = 0.5
) -> np.ndarray:
    g = check_genotype(g)
    mask = rng.random(GENOTYPE_SHAPE) < prob
    noise = rng.normal(0.0, sigma, size=GENOTYPE_SHAPE)
    return np.where(mask, g + noise, g)


def save_genotype(g: np.ndarray, path) -> None:
    g = check_genotype(g)
    np.savetxt(path, g, fmt="%.17g", header=GENOTYPE_HEADER[2:], comments="# ")


def load_genotype(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != GENOTYPE_HEADER:
            raise ValueError(f"not a brain genotype file (header {header!r})")
        return check_genotype(np.loadtxt(fh, ndmin=2))


@dataclass(frozen=True)
class Coupling:
    i: int
    j: int
    weight: float


@dataclass
class CpgNetwork:
    """Oscillator network for one body. ``joint_ids`` are body module indices.

    ``integrator`` is ``"rk4"`` (default) or ``"euler"``.
    """

    joint_ids: tuple[int, ...]
    internal: np.ndarray
    couplings: tuple[Coupling, ...]
    integrator: str = "rk4"
    x: np.ndarray = field(default=None)
    y: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.joint_ids)
        self.internal = np.asarray(self.internal, dtype=float).reshape(n)
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.x is None:
            self.x = np.full(n, INITIAL_STATE)
        if self.y is None:
            self.y = np.full(n, INITIAL_STATE)
        a = np.zeros((n, n))
        for c in self.couplings:
            a[c.i, c.j] += c.weight
            a[c.j, c.i] -= c.weight
        self.coupling_matrix = a
        # d/dt [x; y] = M [x; y]
        self.system_matrix = np.block([[a, np.diag(self.internal)], [-np.diag(self.internal), np.zeros((n, n))]])

    @property
    def size(self) -> int:
        return len(self.joint_ids)

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def reset(self) -> None:
        self.x = np.full(self.size, INITIAL_STATE)
        self.y = np.full(self.size, INITIAL_STATE)

    def outputs(self) -> np.ndarray:
        return np.tanh(self.x)

    def step_matrix(self, dt: float) -> np.ndarray:
        """Linear map applied to the state by one integrator step of size ``dt``."""
        _check_dt(dt)
        h = dt * self.system_matrix
        eye = np.eye(2 * self.size)
        if self.integrator == "euler":
            return eye + h
        h2 = h @ h
        return eye + h + h2 / 2 + h2 @ h / 6 + h2 @ h2 / 24

    def step(self, dt: float) -> np.ndarray:
        return step_cpg(self, dt)

    def rollout(self, n_ticks: int, tick: float, dt: float = 0.001) -> np.ndarray:
        """Advance ``n_ticks`` control ticks of length ``tick`` using internal steps of ``dt``.

        Returns outputs of shape ``(n_ticks + 1, size)``, row 0 being the current outputs.
        """
        substeps = int(round(tick / dt))
        if substeps < 1 or not math.isclose(substeps * dt, tick, rel_tol=1e-9):
            raise ValueError(f"control tick {tick} is not a multiple of dt {dt}")
        out = np.empty((n_ticks + 1, self.size))
        state = self.state
        out[0] = np.tanh(state[: self.size])
        if self.size == 0:
            return out
        prop = np.linalg.matrix_power(self.step_matrix(dt), substeps)
        for k in range(1, n_ticks + 1):
            state = prop @ state
            out[k] = np.tanh(state[: self.size])
        if not np.all(np.isfinite(state)):
            raise FloatingPointError("CPG state diverged")
        self.x, self.y = state[: self.size].copy(), state[self.size :].copy()
        return out


def _check_dt(dt: float) -> None:
    if not (0 < dt <= MAX_DT):
        raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt}")


def step_cpg(network: CpgNetwork, dt: float) -> np.ndarray:
    """Advance every oscillator by one step from the pre-step state; return ``tanh(x)``."""
    _check_dt(dt)
    if network.size == 0:
        return np.empty(0)
    state = network.step_matrix(dt) @ network.state
    if not np.all(np.isfinite(state)):
        raise FloatingPointError("CPG state became non-finite")
    n = network.size
    network.x, network.y = state[:n], state[n:]
    return np.tanh(network.x)


def build_cpg_network(body: BodyPhenotype, genotype: np.ndarray, integrator: str = "rk4") -> CpgNetwork:
    genotype = check_genotype(genotype)
    cells = joint_grid_2d(body)
    rows = [joint_gene_row(c.coord) for c in cells]
    internal = np.array([genotype[r, INTERNAL_COLUMN] for r in rows])
    couplings = []
    for a, b in combinations(range(len(cells)), 2):
        if tree_distance(body, cells[a].joint_id, cells[b].joint_id) > 2:
            continue
        # the joint with the smaller gene row owns the weight; stacked pairs keep body order
        i, j = (a, b) if rows[a] <= rows[b] else (b, a)
        if cells[i].coord == cells[j].coord:
            w = genotype[rows[i], STACKED_COLUMN]
        else:
            off = (cells[j].coord[0] - cells[i].coord[0], cells[j].coord[1] - cells[i].coord[1])
            w = genotype[rows[i], neighbour_column(off)]
        couplings.append(Coupling(i, j, float(w)))
    return CpgNetwork(tuple(c.joint_id for c in cells), internal, tuple(couplings), integrator=integrator)
