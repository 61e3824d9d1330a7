"""Lifetime learning with reversible differential evolution (RevDE)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LearnerConfig:
    mu: int = 10
    generations: int = 10
    F: float = 0.5
    CR: float = 0.9
    init_sigma: float = 0.5

    def __post_init__(self):
        if self.mu < 4:
            raise ValueError("RevDE needs a population of at least 4")
        if self.F <= 0:
            raise ValueError("F must be positive")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError("CR must lie in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")

    @property
    def budget(self) -> int:
        """Assessments used by one learning run: the initial population, then
        3 * mu candidates for every generation after the first."""
        return self.mu + 3 * self.mu * max(self.generations - 1, 0)


@dataclass
class LearningResult:
    best: np.ndarray
    best_performance: float
    assessments: int
    history: list[dict] = field(default_factory=list)


def revde_mutate_triplet(w_i, w_j, w_k, F: float):
    w_i, w_j, w_k = (np.asarray(w, dtype=float) for w in (w_i, w_j, w_k))
    if not (w_i.shape == w_j.shape == w_k.shape):
        raise ValueError(f"triplet shapes differ: {w_i.shape}, {w_j.shape}, {w_k.shape}")
    v1 = w_i + F * (w_j - w_k)
    v2 = w_j + F * (w_k - v1)
    v3 = w_k + F * (v1 - v2)
    return v1, v2, v3


def revde_crossover(target, mutant, CR: float, rng: np.random.Generator) -> np.ndarray:
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant shapes differ")
    mask = rng.random(target.shape) < CR
    return np.where(mask, mutant, target)


def revde(
    initial: np.ndarray,
    evaluate: Callable[[np.ndarray], float],
    config: LearnerConfig,
    rng: np.random.Generator,
    seed_population: np.ndarray | None = None,
) -> LearningResult:
    """Maximise ``evaluate`` starting from ``initial``.

    The first sample is ``initial`` itself; the rest add Gaussian noise to it.
    Selection keeps the best ``mu`` of incumbents and candidates, incumbents
    first on ties, so the population's best never gets worse.
    """
    initial = np.asarray(initial, dtype=float)
    shape = initial.shape
    dim = initial.size
    mu = config.mu
    if seed_population is None:
        pop = np.empty((mu, dim))
        pop[0] = initial.ravel()
        pop[1:] = initial.ravel() + rng.normal(0.0, config.init_sigma, size=(mu - 1, dim))
    else:
        pop = np.array(seed_population, dtype=float).reshape(mu, dim)

    used = 0

    def assess(batch: np.ndarray) -> np.ndarray:
        nonlocal used
        perf = np.empty(len(batch))
        for n, cand in enumerate(batch):
            perf[n] = float(evaluate(cand.reshape(shape)))
            used += 1
        return perf

    perf = assess(pop)
    order = np.argsort(-perf, kind="stable")
    pop, perf = pop[order], perf[order]
    history = [_record(0, perf, used)]

    for gen in range(1, config.generations):
        trip = np.array([rng.choice(mu, size=3, replace=False) for _ in range(mu)])
        wi, wj, wk = pop[trip[:, 0]], pop[trip[:, 1]], pop[trip[:, 2]]
        v1, v2, v3 = revde_mutate_triplet(wi, wj, wk, config.F)
        # candidates ordered triplet by triplet: (u1, u2, u3) for triplet 0, then 1, ...
        targets = np.stack([wi, wj, wk], axis=1).reshape(3 * mu, dim)
        mutants = np.stack([v1, v2, v3], axis=1).reshape(3 * mu, dim)
        cands = revde_crossover(targets, mutants, config.CR, rng)
        cperf = assess(cands)
        allpop = np.vstack([pop, cands])
        allperf = np.concatenate([perf, cperf])
        keep = np.argsort(-allperf, kind="stable")[:mu]
        pop, perf = allpop[keep], allperf[keep]
        history.append(_record(gen, perf, used))

    return LearningResult(pop[0].reshape(shape).copy(), float(perf[0]), used, history)


def _record(gen: int, perf: np.ndarray, used: int) -> dict:
    return {"generation": gen, "best": float(perf.max()), "mean": float(perf.mean()), "assessments": used}


def learn_brain(
    body,
    inherited: np.ndarray,
    task_evaluator,
    config: LearnerConfig,
    rng: np.random.Generator,
    history: list | None = None,
):
    """Tune a brain genotype for a fixed body.

    ``task_evaluator(body, genotype)`` returns the performance of one assessment.
    The inherited genotype is never modified. Returns ``(best, best_performance, assessments)``;
    per-generation records are appended to ``history`` when given.
    """
    inherited = np.asarray(inherited, dtype=float)
    try:
        result = revde(inherited.copy(), lambda g: task_evaluator(body, g), config, rng)
    except Exception:
        log.error("learning failed for body with %d modules", len(body))
        raise
    if history is not None:
        history.extend(result.history)
    return result.best, result.best_performance, result.assessments


def counting_learner(
    body,
    inherited: np.ndarray,
    task_evaluator,
    config: LearnerConfig,
    rng: np.random.Generator,
    history: list | None = None,
):
    """Stand-in for :func:`learn_brain` that walks the same assessment schedule
    (``mu`` initial samples, then ``3 * mu`` per later generation) on the
    inherited genotype without any variation. Used for budget dry runs."""
    used = 0
    best = -np.inf
    for gen in range(max(config.generations, 1)):
        for _ in range(config.mu if gen == 0 else 3 * config.mu):
            best = max(best, float(task_evaluator(body, inherited)))
            used += 1
        if history is not None:
            history.append({"generation": gen, "best": best, "mean": best, "assessments": used})
    return np.array(inherited), best, used
