"""
Growing a body from a CPPN
==========================

A body genome is a small network queried at every candidate grid cell.
Here we grow a few random bodies and draw them from above.
"""

from pathlib import Path

import numpy as np

from evolearn.cppn import CppnMutationParams, InnovationTracker, mutate_cppn, random_cppn
from evolearn.morphology import decode_body, joint_grid_2d
from evolearn.plotting import morphology_plot

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(3)
tracker = InnovationTracker()

# a fresh genome: every input wired to every output, no hidden nodes
genome = random_cppn(rng)
print(len(genome.nodes), "nodes,", len(genome.connections), "connections")

# structural mutations add hidden nodes; the body usually changes with them
params = CppnMutationParams(add_node_prob=0.3, add_connection_prob=0.3)
for step in range(4):
    body = decode_body(genome)
    print(f"step {step}: {len(body)} modules, joints at", [c.coord for c in joint_grid_2d(body)])
    morphology_plot(body.to_dict(), OUT / f"body_{step}.svg")
    for _ in range(5):
        genome = mutate_cppn(genome, rng, params, tracker)
