"""
A tiny evolution run
====================

Bodies and brains evolve together; every individual learns before it is
scored. The Lamarckian variant writes the learned brain back into the genome.
"""

from pathlib import Path

from evolearn.evolution import EvolutionConfig
from evolearn.experiment import run_single
from evolearn.learner import LearnerConfig

OUT = Path("demo_output")

for inheritance in ("darwinian", "lamarckian"):
    cfg = EvolutionConfig(population_size=6, offspring_per_gen=3, generations=4, task="rotation",
                          inheritance=inheritance, learner=LearnerConfig(mu=4, generations=2), seed=7)
    run_dir = OUT / f"mini_{inheritance}"
    if (run_dir / "DONE").exists():
        print(run_dir, "already done")
        continue
    run_single(cfg, run_dir)
    print(run_dir, (run_dir / "generations.csv").read_text().splitlines()[-1])
