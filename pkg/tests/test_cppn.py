import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import constant_genome
from evolearn.cppn import (
    ConnectionGene,
    CppnGenome,
    CppnMutationParams,
    InnovationTracker,
    NodeGene,
    crossover_cppn,
    evaluate_cppn,
    is_acyclic,
    mutate_cppn,
    random_cppn,
)


def test_zero_network_outputs_zero():
    g = constant_genome(["linear"] * 5, weight=0.0)
    for q in [(0, 1, 0, 1), (3, -2, 1, 4), (0.5, 0.5, 0.5, 0.5)]:
        assert evaluate_cppn(g, q).tolist() == [0.0] * 5


def test_single_edge_network():
    nodes = tuple([NodeGene(i, "input") for i in range(4)] + [NodeGene(o, "output", "linear") for o in range(4, 9)])
    g = CppnGenome(nodes, (ConnectionGene(0, 4, 1.0, True, 0),))
    assert evaluate_cppn(g, (2, 0, 0, 0)).tolist() == [2.0, 0.0, 0.0, 0.0, 0.0]


def test_evaluation_is_deterministic_and_survives_serialisation(rng):
    g = random_cppn(rng)
    for _ in range(5):
        g = mutate_cppn(g, rng, CppnMutationParams(add_node_prob=0.5, add_connection_prob=0.5))
    q = (1, -2, 0, 3)
    a, b = evaluate_cppn(g, q), evaluate_cppn(g, q)
    assert a.tobytes() == b.tobytes()
    g2 = CppnGenome.from_json(g.to_json())
    assert g2 == g
    assert evaluate_cppn(g2, q).tobytes() == a.tobytes()


@pytest.mark.parametrize("bad", [(math.nan, 0, 0, 0), (0, math.inf, 0, 0), (0, 0, 0)])
def test_rejects_bad_queries(rng, bad):
    with pytest.raises(ValueError):
        evaluate_cppn(random_cppn(rng), bad)


def test_random_cppn_contract():
    a = random_cppn(np.random.default_rng(5))
    b = random_cppn(np.random.default_rng(5))
    assert a == b
    assert len(a.connections) == 20
    assert not a.hidden_nodes
    assert all(-1 <= c.weight <= 1 for c in a.connections)
    assert sorted(c.innovation for c in a.connections) == list(range(20))


def test_serialisation_rejects_unknown_schema(rng):
    d = random_cppn(rng).to_dict()
    d["schema"] = "other/9"
    with pytest.raises(ValueError):
        CppnGenome.from_dict(d)


def test_invariants_enforced_on_construction():
    nodes = tuple([NodeGene(i, "input") for i in range(4)] + [NodeGene(o, "output") for o in range(4, 9)])
    hidden = nodes + (NodeGene(9, "hidden"), NodeGene(10, "hidden"))
    cyclic = (ConnectionGene(9, 10, 1.0, True, 0), ConnectionGene(10, 9, 1.0, True, 1))
    with pytest.raises(ValueError, match="cyclic"):
        CppnGenome(hidden, cyclic)
    with pytest.raises(ValueError):
        CppnGenome(nodes[:-1], ())


def test_mutation_with_zero_rates_is_identity(rng):
    g = random_cppn(rng)
    assert mutate_cppn(g, rng, CppnMutationParams.disabled()) == g


def test_add_node_bookkeeping(rng):
    g = random_cppn(rng)
    tracker = InnovationTracker()
    params = CppnMutationParams(weight_perturb_prob=0, weight_reset_prob=0, add_node_prob=1.0, add_connection_prob=0)
    child = mutate_cppn(g, rng, params, tracker)
    assert len(child.nodes) == len(g.nodes) + 1
    assert len(child.connections) == len(g.connections) + 2
    disabled = [c for c in child.connections if not c.enabled]
    assert len(disabled) == 1
    old = disabled[0]
    new_id = child.hidden_nodes[0].id
    added = child.connections[-2:]
    assert (added[0].src, added[0].dst, added[0].weight) == (old.src, new_id, 1.0)
    assert (added[1].src, added[1].dst, added[1].weight) == (new_id, old.dst, old.weight)
    # the split connection alone is disabled; input/output bookkeeping intact
    assert [c.innovation for c in child.connections[:20]] == [c.innovation for c in g.connections]


def test_same_structural_change_gets_same_innovation(rng):
    tracker = InnovationTracker()
    assert tracker.innovation(0, 9) == tracker.innovation(0, 9)
    assert tracker.innovation(0, 9) != tracker.innovation(9, 4)
    assert tracker.split_node(3) == tracker.split_node(3)


def test_thousand_mutations_stay_acyclic():
    rng = np.random.default_rng(0)
    tracker = InnovationTracker()
    params = CppnMutationParams(add_node_prob=0.3, add_connection_prob=0.5)
    g = random_cppn(rng)
    for _ in range(1000):
        g = mutate_cppn(g, rng, params, tracker)
        assert is_acyclic(g)
    assert len(g.hidden_nodes) > 0
    pairs = {}
    for c in g.connections:
        assert pairs.setdefault(c.innovation, (c.src, c.dst)) == (c.src, c.dst)


def test_self_crossover_is_identity(rng):
    g = random_cppn(rng)
    child = crossover_cppn(g, g, 1.0, 1.0, rng)
    assert {(c.innovation, c.weight, c.enabled) for c in child.connections} == {
        (c.innovation, c.weight, c.enabled) for c in g.connections
    }


def _split(g, rng, tracker, which):
    params = CppnMutationParams(weight_perturb_prob=0, weight_reset_prob=0, add_node_prob=1.0, add_connection_prob=0)
    while True:
        child = mutate_cppn(g, rng, params, tracker)
        split = [c for c in child.connections if not c.enabled][0].innovation
        if split == which:
            return child


def test_crossover_takes_disjoint_structure_from_fitter_parent(rng):
    tracker = InnovationTracker()
    base = random_cppn(rng)
    a = _split(base, rng, tracker, which=0)
    b = _split(base, rng, tracker, which=7)
    child = crossover_cppn(a, b, 2.0, 1.0, rng)
    assert [n.id for n in child.hidden_nodes] == [n.id for n in a.hidden_nodes]
    assert {c.innovation for c in child.connections} == {c.innovation for c in a.connections}
    child_b = crossover_cppn(a, b, 1.0, 2.0, rng)
    assert [n.id for n in child_b.hidden_nodes] == [n.id for n in b.hidden_nodes]
    assert len(child.nodes) >= 9


def test_crossover_mixes_matching_weights():
    rng = np.random.default_rng(3)
    a, b = random_cppn(rng), random_cppn(rng)
    child = crossover_cppn(a, b, 1.0, 1.0, rng)
    wa = {c.innovation: c.weight for c in a.connections}
    wb = {c.innovation: c.weight for c in b.connections}
    picks = [c.weight == wa[c.innovation] for c in child.connections]
    assert all(c.weight in (wa[c.innovation], wb[c.innovation]) for c in child.connections)
    assert 0 < sum(picks) < len(picks)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), steps=st.integers(1, 30))
def test_variation_preserves_interface_and_acyclicity(seed, steps):
    rng = np.random.default_rng(seed)
    tracker = InnovationTracker()
    params = CppnMutationParams(add_node_prob=0.3, add_connection_prob=0.4)
    pop = [random_cppn(rng) for _ in range(4)]
    for _ in range(steps):
        i, j = rng.integers(len(pop), size=2)
        child = crossover_cppn(pop[i], pop[j], float(rng.random()), float(rng.random()), rng)
        child = mutate_cppn(child, rng, params, tracker)
        assert is_acyclic(child)
        assert sum(n.kind == "input" for n in child.nodes) == 4
        assert sum(n.kind == "output" for n in child.nodes) == 5
        pop[int(rng.integers(len(pop)))] = child
