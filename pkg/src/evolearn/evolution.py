"""Evolution + learning loop over body (CPPN) and brain (CPG matrix) genotypes.

Two switches select the variant:

* ``brain_mode``: ``"sexual"`` recombines both parents' brain genotypes before
  mutation; ``"asexual"`` mutates the fitter parent's genotype only.
* ``inheritance``: ``"lamarckian"`` writes the learned brain back into the
  inheritable genotype; ``"darwinian"`` leaves the genotype untouched.

Bodies always reproduce sexually.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .brain import gaussian_mutate_brain, random_brain, uniform_crossover_brain
from .cppn import (
    CppnGenome,
    CppnInitParams,
    CppnMutationParams,
    InnovationTracker,
    crossover_cppn,
    mutate_cppn,
    random_cppn,
)
from .learner import LearnerConfig, counting_learner, learn_brain
from .morphology import BodyPhenotype, decode_body
from .sim import SimParams
from .tasks import make_task

log = logging.getLogger(__name__)

BRAIN_MODES = ("asexual", "sexual")
INHERITANCES = ("darwinian", "lamarckian")
TASKS = ("point_nav", "rotation")

Evaluator = Callable[[BodyPhenotype, np.ndarray], float]


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 50
    offspring_per_gen: int = 25
    generations: int = 30
    brain_mode: str = "asexual"
    inheritance: str = "darwinian"
    task: str = "point_nav"
    learner: LearnerConfig = LearnerConfig()
    seed: int = 0
    task_params: dict = field(default_factory=dict)
    sim: SimParams = SimParams()
    cppn_init: CppnInitParams = CppnInitParams()
    cppn_mutation: CppnMutationParams = CppnMutationParams()
    brain_mutation_prob: float = 0.8
    brain_mutation_sigma: float = 0.5
    brain_init_range: float = 1.0

    def __post_init__(self):
        if self.brain_mode not in BRAIN_MODES:
            raise ValueError(f"brain_mode must be one of {BRAIN_MODES}")
        if self.inheritance not in INHERITANCES:
            raise ValueError(f"inheritance must be one of {INHERITANCES}")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.population_size < 1 or self.offspring_per_gen < 1 or self.generations < 1:
            raise ValueError("population_size, offspring_per_gen and generations must be >= 1")

    @property
    def evaluation_budget(self) -> int:
        return self.population_size + self.offspring_per_gen * (self.generations - 1)

    def make_task(self):
        return make_task(self.task, **dict(self.task_params))


@dataclass(eq=False)
class Individual:
    id: int
    born: int
    body_genome: CppnGenome
    body: BodyPhenotype
    inherited_brain: np.ndarray  # genotype as created; never written to
    brain_genotype: np.ndarray  # what offspring inherit
    parents: tuple[int, ...] = ()
    brain_parents: tuple[int, ...] = ()
    learned_brain: np.ndarray | None = None
    learned_performance: float = math.nan
    fitness: float = math.nan
    assessments: int = 0

    @property
    def evaluated(self) -> bool:
        return not math.isnan(self.fitness)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def binary_tournament(population: Sequence[Individual], rng: np.random.Generator) -> Individual:
    """Draw two with replacement; the fitter wins, the first draw on ties."""
    if not population:
        raise ValueError("empty population")
    i, j = rng.integers(len(population), size=2)
    a, b = population[i], population[j]
    return a if a.fitness >= b.fitness else b


def reproduce(
    parent_a: Individual,
    parent_b: Individual,
    config: EvolutionConfig,
    rng: np.random.Generator,
    tracker: InnovationTracker,
) -> tuple[CppnGenome, np.ndarray, tuple[int, ...]]:
    """Return ``(body_genome, brain_genotype, brain_parent_ids)`` for one child."""
    body = crossover_cppn(parent_a.body_genome, parent_b.body_genome, parent_a.fitness, parent_b.fitness, rng)
    body = mutate_cppn(body, rng, config.cppn_mutation, tracker)
    if config.brain_mode == "sexual":
        brain = uniform_crossover_brain(parent_a.brain_genotype, parent_b.brain_genotype, rng)
        sources = (parent_a.id, parent_b.id)
    else:
        best = parent_a if parent_a.fitness >= parent_b.fitness else parent_b
        brain = np.array(best.brain_genotype)
        sources = (best.id,)
    brain = gaussian_mutate_brain(brain, rng, config.brain_mutation_prob, config.brain_mutation_sigma)
    return body, brain, sources


def survivor_selection(
    current: Sequence[Individual], offspring: Sequence[Individual], population_size: int
) -> list[Individual]:
    """(mu + lambda) truncation; ties favour incumbents, then lower ids."""
    pool = [(ind, 0) for ind in current] + [(ind, 1) for ind in offspring]
    pool.sort(key=lambda p: (-p[0].fitness, p[1], p[0].id))
    return [ind for ind, _ in pool[:population_size]]


def task_evaluator(config: EvolutionConfig) -> Evaluator:
    task = config.make_task()
    sim = config.sim

    def evaluate(body: BodyPhenotype, brain: np.ndarray) -> float:
        return task.fitness(task.run(body, brain, sim))

    return evaluate


@dataclass
class RunLog:
    config: EvolutionConfig
    generations: list[dict] = field(default_factory=list)
    population_rows: list[dict] = field(default_factory=list)
    learning_rows: list[dict] = field(default_factory=list)
    individuals: list[Individual] = field(default_factory=list)
    population: list[Individual] = field(default_factory=list)
    evaluations: int = 0
    assessments: int = 0

    @property
    def best(self) -> Individual:
        return max(self.population, key=lambda ind: ind.fitness)

    @property
    def best_fitness(self) -> list[float]:
        return [g["max_fitness"] for g in self.generations]

    def write(self, run_dir) -> None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(run_dir / "generations.csv", GENERATION_COLUMNS, self.generations)
        _write_csv(run_dir / "population.csv", POPULATION_COLUMNS, self.population_rows)
        _write_csv(run_dir / "learning.csv", LEARNING_COLUMNS, self.learning_rows)


GENERATION_COLUMNS = ("generation", "evaluations", "assessments", "mean_fitness", "max_fitness", "min_fitness")
POPULATION_COLUMNS = (
    "generation", "id", "born", "parent_a", "parent_b", "brain_parents",
    "fitness", "learned_performance", "assessments", "modules", "joints",
)
LEARNING_COLUMNS = ("id", "learner_generation", "best", "mean", "assessments")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def evolve(
    config: EvolutionConfig,
    evaluator: Evaluator | None = None,
    learner: Callable = learn_brain,
    on_generation: Callable[[int, list[Individual]], None] | None = None,
) -> RunLog:
    """Run the full evolution + learning loop and return its log.

    ``evaluator(body, brain)`` scores both learning assessments and the
    evaluation of learned brains; it defaults to simulating the configured task.
    """
    evaluator = evaluator if evaluator is not None else task_evaluator(config)
    run = RunLog(config)
    tracker = InnovationTracker()
    init_rng = np.random.default_rng([config.seed, 0])
    repro_rng = np.random.default_rng([config.seed, 1])
    next_id = 0

    def counted(body, brain):
        run.assessments += 1
        return evaluator(body, brain)

    def develop(ind: Individual, generation: int) -> None:
        rng = np.random.default_rng([config.seed, 2, ind.id])
        history: list[dict] = []
        try:
            best, perf, used = learner(ind.body, ind.inherited_brain, counted, config.learner, rng, history=history)
            ind.learned_brain = _frozen(best)
            ind.learned_performance = float(perf)
            ind.assessments = int(used)
            ind.fitness = float(evaluator(ind.body, ind.learned_brain))
        except Exception as exc:
            raise RuntimeError(f"generation {generation}, individual {ind.id}: {exc}") from exc
        run.evaluations += 1
        if config.inheritance == "lamarckian":
            ind.brain_genotype = ind.learned_brain
        for h in history:
            run.learning_rows.append({"id": ind.id, "learner_generation": h["generation"], "best": h["best"],
                                      "mean": h["mean"], "assessments": h["assessments"]})
        run.individuals.append(ind)

    population = []
    for _ in range(config.population_size):
        genome = random_cppn(init_rng, config.cppn_init)
        r = config.brain_init_range
        brain = _frozen(random_brain(init_rng, -r, r))
        ind = Individual(next_id, 0, genome, decode_body(genome), brain, brain)
        next_id += 1
        develop(ind, 0)
        population.append(ind)
    _log_generation(run, 0, population)
    if on_generation:
        on_generation(0, population)

    for gen in range(1, config.generations):
        offspring = []
        for _ in range(config.offspring_per_gen):
            pa = binary_tournament(population, repro_rng)
            pb = binary_tournament(population, repro_rng)
            genome, brain, sources = reproduce(pa, pb, config, repro_rng, tracker)
            brain = _frozen(brain)
            offspring.append(
                Individual(next_id, gen, genome, decode_body(genome), brain, brain, (pa.id, pb.id), sources)
            )
            next_id += 1
        for child in offspring:
            develop(child, gen)
        population = survivor_selection(population, offspring, config.population_size)
        _log_generation(run, gen, population)
        if on_generation:
            on_generation(gen, population)

    run.population = population
    return run


def _log_generation(run: RunLog, gen: int, population: list[Individual]) -> None:
    fit = np.array([ind.fitness for ind in population])
    run.generations.append({
        "generation": gen,
        "evaluations": run.evaluations,
        "assessments": run.assessments,
        "mean_fitness": float(fit.mean()),
        "max_fitness": float(fit.max()),
        "min_fitness": float(fit.min()),
    })
    for ind in population:
        run.population_rows.append({
            "generation": gen,
            "id": ind.id,
            "born": ind.born,
            "parent_a": ind.parents[0] if ind.parents else -1,
            "parent_b": ind.parents[1] if ind.parents else -1,
            "brain_parents": ";".join(str(p) for p in ind.brain_parents),
            "fitness": ind.fitness,
            "learned_performance": ind.learned_performance,
            "assessments": ind.assessments,
            "modules": len(ind.body),
            "joints": len(ind.body.hinges),
        })
    log.info("generation %d: max %.4f mean %.4f", gen, fit.max(), fit.mean())


def dry_run(config: EvolutionConfig) -> RunLog:
    """Execute the loop with a constant evaluator and a counting learner to
    check evaluation and assessment accounting without simulating anything."""
    return evolve(config, evaluator=lambda body, brain: 0.0, learner=counting_learner)
