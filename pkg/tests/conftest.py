import numpy as np
import pytest

from evolearn.cppn import ConnectionGene, CppnGenome, NodeGene, INPUT_IDS, OUTPUT_IDS
from evolearn.morphology import BodyPhenotype, grow_body


def constant_genome(output_activations, weight=0.0):
    """Fully connected genome with every weight equal to ``weight``."""
    nodes = [NodeGene(i, "input") for i in INPUT_IDS]
    nodes += [NodeGene(o, "output", a) for o, a in zip(OUTPUT_IDS, output_activations)]
    conns = [
        ConnectionGene(i, o, weight, True, n)
        for n, (i, o) in enumerate((i, o) for i in INPUT_IDS for o in OUTPUT_IDS)
    ]
    return CppnGenome(tuple(nodes), tuple(conns))


def scripted_body(layout):
    """Grow a body from ``{(x, y, z): (type_index, rotation_index)}``; unlisted cells are empty."""

    def query(q):
        key = tuple(int(v) for v in q[:3])
        kind, rot = layout.get(key, (2, 0))
        out = [0.0] * 5
        out[kind] = 1.0
        out[3 + rot] = 1.0
        return out

    return grow_body(query)


BRICK, HINGE = 0, 1


@pytest.fixture
def plus_body() -> BodyPhenotype:
    """Core with an active hinge on each of its four faces."""
    return scripted_body({(0, 1, 0): (HINGE, 0), (0, -1, 0): (HINGE, 0), (-1, 0, 0): (HINGE, 0), (1, 0, 0): (HINGE, 0)})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
