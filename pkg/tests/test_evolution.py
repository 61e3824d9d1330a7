import math

import numpy as np
import pytest

from evolearn.cppn import InnovationTracker, random_cppn
from evolearn.evolution import (
    EvolutionConfig,
    Individual,
    binary_tournament,
    dry_run,
    evolve,
    reproduce,
    survivor_selection,
)
from evolearn.learner import LearnerConfig
from evolearn.morphology import decode_body

TINY = dict(population_size=6, offspring_per_gen=3, generations=4, learner=LearnerConfig(mu=4, generations=2))


def cheap(body, g):
    """Fast stand-in objective: rewards a large first gene and more modules."""
    return float(g[0, 0]) + 0.1 * len(body)


def _ind(i, fitness, rng=None, brain=None):
    rng = rng or np.random.default_rng(i)
    genome = random_cppn(rng)
    brain = np.full((440, 14), float(i)) if brain is None else brain
    return Individual(i, 0, genome, decode_body(genome), brain, brain, fitness=fitness)


def test_default_budget():
    cfg = EvolutionConfig()
    assert cfg.evaluation_budget == 775
    log = dry_run(cfg)
    assert log.evaluations == 775
    assert log.assessments == 775 * 280
    assert [g["evaluations"] for g in log.generations][:2] == [50, 75]


@pytest.mark.parametrize("kw", [dict(brain_mode="clonal"), dict(inheritance="baldwin"), dict(task="swim"),
                                dict(population_size=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolutionConfig(**kw)


def test_binary_tournament_prefers_fitter():
    pop = [_ind(0, 1.0), _ind(1, 5.0)]
    rng = np.random.default_rng(0)
    wins = [binary_tournament(pop, rng).id for _ in range(400)]
    # the weaker one only wins when drawn twice: probability 1/4
    assert 0.18 < wins.count(0) / 400 < 0.32
    with pytest.raises(ValueError):
        binary_tournament([], rng)


def test_binary_tournament_tie_goes_to_first_draw():
    class Fixed:
        def integers(self, n, size):
            return np.array([1, 0])

    pop = [_ind(0, 2.0), _ind(1, 2.0)]
    assert binary_tournament(pop, Fixed()).id == 1


def test_survivor_selection_ties():
    cur = [_ind(5, 1.0), _ind(2, 3.0)]
    off = [_ind(1, 3.0), _ind(9, 0.5), _ind(7, 1.0)]
    kept = survivor_selection(cur, off, 3)
    assert [i.id for i in kept] == [2, 1, 5]


def test_reproduce_modes():
    a, b = _ind(0, 1.0), _ind(1, 2.0)
    tracker = InnovationTracker()
    rng = np.random.default_rng(3)
    _, brain, src = reproduce(a, b, EvolutionConfig(brain_mode="asexual"), rng, tracker)
    assert src == (1,)
    changed = brain != 1.0
    assert 0.75 < changed.mean() < 0.85  # only mutation alters the fitter parent's genes
    _, brain, src = reproduce(a, b, EvolutionConfig(brain_mode="sexual", brain_mutation_prob=0.0), rng, tracker)
    assert src == (0, 1)
    assert set(np.unique(brain)) == {0.0, 1.0}


def test_asexual_equal_fitness_uses_first_parent():
    a, b = _ind(0, 1.0), _ind(1, 1.0)
    _, _, src = reproduce(a, b, EvolutionConfig(), np.random.default_rng(0), InnovationTracker())
    assert src == (0,)


@pytest.mark.parametrize("inheritance", ["darwinian", "lamarckian"])
def test_inheritance_contract(inheritance):
    log = evolve(EvolutionConfig(inheritance=inheritance, seed=3, **TINY), evaluator=cheap)
    for ind in log.individuals:
        assert not ind.brain_genotype.flags.writeable and not ind.inherited_brain.flags.writeable
        if inheritance == "darwinian":
            assert ind.brain_genotype is ind.inherited_brain
        else:
            assert np.array_equal(ind.brain_genotype, ind.learned_brain)
    assert any(not np.array_equal(i.learned_brain, i.inherited_brain) for i in log.individuals)


def test_evolve_accounting_and_elitism():
    cfg = EvolutionConfig(seed=1, **TINY)
    seen = []
    log = evolve(cfg, evaluator=cheap, on_generation=lambda g, pop: seen.append((g, len(pop))))
    assert seen == [(g, 6) for g in range(4)]
    assert log.evaluations == cfg.evaluation_budget == 15
    assert log.assessments == 15 * cfg.learner.budget
    best = log.best_fitness
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert log.best.fitness == best[-1]
    assert len(log.population_rows) == 6 * 4
    assert all(math.isfinite(i.fitness) for i in log.individuals)
    # fitness is the re-evaluation of the learned brain
    for ind in log.individuals:
        assert ind.fitness == cheap(ind.body, ind.learned_brain)


def test_evolve_is_seed_deterministic():
    a = evolve(EvolutionConfig(seed=4, brain_mode="sexual", **TINY), evaluator=cheap)
    b = evolve(EvolutionConfig(seed=4, brain_mode="sexual", **TINY), evaluator=cheap)
    c = evolve(EvolutionConfig(seed=5, brain_mode="sexual", **TINY), evaluator=cheap)
    assert a.generations == b.generations
    assert a.population_rows == b.population_rows
    assert a.generations != c.generations


def test_failures_name_the_individual():
    def boom(body, g):
        raise FloatingPointError("diverged")

    with pytest.raises(RuntimeError, match="generation 0, individual 0"):
        evolve(EvolutionConfig(**TINY), evaluator=boom)


def test_run_log_csvs(tmp_path):
    log = evolve(EvolutionConfig(seed=2, **TINY), evaluator=cheap)
    log.write(tmp_path)
    gens = (tmp_path / "generations.csv").read_text().splitlines()
    assert gens[0] == "generation,evaluations,assessments,mean_fitness,max_fitness,min_fitness"
    assert len(gens) == 5
    learning = (tmp_path / "learning.csv").read_text().splitlines()
    assert len(learning) == 1 + 15 * 2


@pytest.mark.slow
def test_real_simulation_smoke():
    cfg = EvolutionConfig(population_size=4, offspring_per_gen=2, generations=2, task="rotation",
                          learner=LearnerConfig(mu=4, generations=2), seed=0)
    log = evolve(cfg)
    assert log.evaluations == 6
    assert all(math.isfinite(i.fitness) for i in log.individuals)


def test_modes_share_generation_zero():
    logs = [evolve(EvolutionConfig(seed=8, brain_mode=m, inheritance=i, **TINY), evaluator=cheap)
            for m in ("asexual", "sexual") for i in ("darwinian", "lamarckian")]
    first = [[(ind.id, ind.fitness) for ind in log.individuals[:6]] for log in logs]
    assert all(f == first[0] for f in first)
    assert all(np.array_equal(a.inherited_brain, b.inherited_brain)
               for a, b in zip(logs[0].individuals[:6], logs[3].individuals[:6]))
