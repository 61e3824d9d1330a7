import math

import numpy as np
import pytest

from conftest import BRICK, HINGE, scripted_body
from evolearn import brain
from evolearn.brain import (
    GENOTYPE_SHAPE,
    CpgNetwork,
    build_cpg_network,
    gaussian_mutate_brain,
    joint_gene_row,
    load_genotype,
    neighbour_column,
    save_genotype,
    step_cpg,
    uniform_crossover_brain,
)


@pytest.mark.parametrize(
    "coord, row",
    [((-10, -10), 0), ((-10, -9), 1), ((-9, -10), 21), ((0, -1), 219), ((0, 1), 220), ((1, 0), 240), ((10, 10), 439)],
)
def test_joint_gene_row_examples(coord, row):
    assert joint_gene_row(coord) == row


@pytest.mark.parametrize("coord", [(0, 0), (11, 0), (0, -11)])
def test_joint_gene_row_rejects(coord):
    with pytest.raises(ValueError):
        joint_gene_row(coord)


def test_rows_are_a_bijection():
    rows = {joint_gene_row((x, y)) for x in range(-10, 11) for y in range(-10, 11) if (x, y) != (0, 0)}
    assert rows == set(range(440))


@pytest.mark.parametrize(
    "offset, col",
    [((0, 0), 0), ((-2, 0), 1), ((-1, -1), 2), ((-1, 0), 3), ((0, -1), 6), ((0, 1), 7), ((1, 0), 10), ((2, 0), 12)],
)
def test_neighbour_column_examples(offset, col):
    assert neighbour_column(offset) == col


def test_neighbour_column_rejects():
    assert neighbour_column((0, 0), stacked=True) == 13
    for bad in [(2, 1), (3, 0), (0, -3)]:
        with pytest.raises(ValueError):
            neighbour_column(bad)
    with pytest.raises(ValueError):
        neighbour_column((1, 0), stacked=True)


def test_plus_body_network(plus_body):
    g = np.arange(np.prod(GENOTYPE_SHAPE), dtype=float).reshape(GENOTYPE_SHAPE) / 1000
    net = build_cpg_network(plus_body, g)
    assert net.joint_ids == (1, 2, 3, 4)
    assert len(net.couplings) == 6
    rows = [joint_gene_row(c) for c in [(0, 1), (0, -1), (-1, 0), (1, 0)]]
    assert net.internal.tolist() == [g[r, 0] for r in rows]
    # left (-1,0) at row 199 owns the pair with right (1,0): offset (2,0) -> column 12
    left, right = 2, 3
    assert net.coupling_matrix[left, right] == g[199, 12]
    assert net.coupling_matrix[right, left] == -g[199, 12]
    np.testing.assert_array_equal(net.coupling_matrix, -net.coupling_matrix.T)


def test_far_joints_are_not_coupled():
    # hinge chain along +y: tree distances 1, 2, 3 from the first hinge
    body = scripted_body({(0, 1, 0): (BRICK, 0), (0, 2, 0): (HINGE, 0), (0, 3, 0): (HINGE, 0), (0, 4, 0): (HINGE, 0),
                          (0, 5, 0): (HINGE, 0)})
    net = build_cpg_network(body, np.ones(GENOTYPE_SHAPE))
    pairs = {(c.i, c.j) for c in net.couplings}
    assert pairs == {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}


def test_stacked_pair_uses_stacked_column():
    body = scripted_body({(0, 1, 0): (BRICK, 1), (0, 1, 1): (HINGE, 0), (0, 1, -1): (HINGE, 0)})
    g = np.zeros(GENOTYPE_SHAPE)
    g[joint_gene_row((0, 1)), 13] = 0.7
    net = build_cpg_network(body, g)
    assert len(net.couplings) == 1 and net.couplings[0].weight == 0.7


def test_zero_weights_freeze_the_state():
    net = CpgNetwork((0, 1), np.zeros(2), ())
    for _ in range(100):
        out = step_cpg(net, 0.01)
    np.testing.assert_allclose(out, math.tanh(math.sqrt(2) / 2))
    assert round(float(out[0]), 4) == 0.6089


@pytest.mark.parametrize("integrator, tol", [("euler", 5e-3), ("rk4", 1e-10)])
def test_single_oscillator_tracks_shifted_sine(integrator, tol):
    net = CpgNetwork((0,), np.array([1.0]), (), integrator=integrator)
    dt = 0.001
    for k in range(1, 1001):
        step_cpg(net, dt)
    assert abs(net.x[0] - math.sin(1.0 + math.pi / 4)) < tol


def test_euler_energy_drift_below_one_percent_per_period():
    net = CpgNetwork((0,), np.array([1.0]), (), integrator="euler")
    e0 = net.x[0] ** 2 + net.y[0] ** 2
    for _ in range(int(2 * math.pi / 0.001)):
        step_cpg(net, 0.001)
    assert abs(net.x[0] ** 2 + net.y[0] ** 2 - e0) / e0 < 0.01


def test_update_is_simultaneous():
    net = CpgNetwork((0, 1), np.array([0.0, 0.0]), (brain.Coupling(0, 1, 1.0),), integrator="euler")
    x0 = net.x.copy()
    step_cpg(net, 0.01)
    # dx0 = +x1, dx1 = -x0, both from the pre-step state
    np.testing.assert_allclose(net.x, [x0[0] + 0.01 * x0[1], x0[1] - 0.01 * x0[0]])


def test_rollout_matches_stepping(plus_body, rng):
    g = brain.random_brain(rng)
    a, b = build_cpg_network(plus_body, g), build_cpg_network(plus_body, g)
    outs = a.rollout(20, 0.05, 0.001)
    for k in range(1, 21):
        for _ in range(50):
            step_cpg(b, 0.001)
        np.testing.assert_allclose(outs[k], b.outputs(), atol=1e-12)
    assert np.all(np.abs(outs) <= 1)


@pytest.mark.parametrize("dt", [0.0, -0.001, 0.02])
def test_dt_validation(dt):
    with pytest.raises(ValueError):
        step_cpg(CpgNetwork((0,), np.ones(1), ()), dt)


def test_uniform_crossover_statistics(rng):
    a, b = np.zeros(GENOTYPE_SHAPE), np.ones(GENOTYPE_SHAPE)
    child = uniform_crossover_brain(a, b, rng)
    assert set(np.unique(child)) <= {0.0, 1.0}
    assert abs(child.mean() - 0.5) < 0.03


def test_gaussian_mutation_statistics(rng):
    g = np.zeros(GENOTYPE_SHAPE)
    child = gaussian_mutate_brain(g, rng, prob=0.8, sigma=0.5)
    changed = child != 0
    assert abs(changed.mean() - 0.8) < 0.03
    assert abs(child[changed].std() - 0.5) < 0.03
    # rows of unused grid cells mutate like any other
    assert changed[:10].mean() > 0.6


def test_genotype_validation():
    with pytest.raises(ValueError):
        brain.check_genotype(np.zeros((440, 13)))
    bad = np.zeros(GENOTYPE_SHAPE)
    bad[3, 3] = np.nan
    with pytest.raises(ValueError):
        brain.check_genotype(bad)


def test_save_load_round_trip(tmp_path, rng):
    g = brain.random_brain(rng)
    path = tmp_path / "brain.txt"
    save_genotype(g, path)
    assert path.read_text().startswith(brain.GENOTYPE_HEADER)
    np.testing.assert_array_equal(load_genotype(path), g)
    other = tmp_path / "other.txt"
    other.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        load_genotype(other)
