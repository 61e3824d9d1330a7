"""
Lifetime learning with RevDE
============================

RevDE tunes a vector starting from an inherited one. On a quadratic bowl the
best performance climbs every generation; the budget is mu + 3 mu (G - 1).
"""

import numpy as np

from evolearn.learner import LearnerConfig, revde, revde_mutate_triplet

# the triplet map on a hand-picked input
print([float(v[0]) for v in revde_mutate_triplet([1.0], [0.0], [0.0], 0.5)])

rng = np.random.default_rng(0)
target = rng.normal(size=10)
cfg = LearnerConfig(mu=10, generations=10)
res = revde(np.zeros(10), lambda g: -float(np.sum((g - target) ** 2)), cfg, rng)

for h in res.history:
    print(f"gen {h['generation']}: best {h['best']:.3f} mean {h['mean']:.3f} ({h['assessments']} assessments)")
print("budget", cfg.budget, "used", res.assessments)
