"""Acceptance checks shared by ``evolearn verify`` and the test suite.

Each check returns a :class:`CheckResult`; none of them raises on failure.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import brain, learner, tasks
from .evolution import EvolutionConfig, dry_run, evolve
from .learner import LearnerConfig


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


DESK_LEARNER = LearnerConfig(mu=4, generations=3)


def desk_config(**kw) -> EvolutionConfig:
    base = dict(population_size=8, offspring_per_gen=4, generations=5, learner=DESK_LEARNER)
    base.update(kw)
    return EvolutionConfig(**base)


def _timed(number, name, fn) -> CheckResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def check_worked_fitness_example():
    def run():
        # straight segments sampled every 0.05 m, hitting both targets exactly
        leg1 = [(s, -s) for s in np.linspace(0, 1, 21)]
        leg2 = [(1 - s, -1 - s) for s in np.linspace(0, 1, 21)[1:]]
        traj = tasks.Trajectory.from_points(leg1 + leg2)
        f = tasks.fitness_point_navigation(traj, tasks.PointNavTask())
        return abs(f - 2.54) <= 0.01, f"fitness {f:.5f}, expected 2.54 +- 0.01"

    return _timed(1, "worked point-navigation fitness", run)


def check_revde_hand_values():
    def run():
        v = learner.revde_mutate_triplet([1.0], [0.0], [0.0], 0.5)
        exact = [float(x[0]) for x in v] == [1.0, -0.5, 0.75]
        # matrix of the triplet map, built column by column from unit inputs
        cols = []
        for e in np.eye(3):
            cols.append([float(x[0]) for x in learner.revde_mutate_triplet([e[0]], [e[1]], [e[2]], 0.5)])
        m = np.array(cols).T
        rng = np.random.default_rng(7)
        w = rng.normal(size=(3, 25))
        vs = np.array(learner.revde_mutate_triplet(w[0], w[1], w[2], 0.5))
        err = float(np.max(np.abs(np.linalg.solve(m, vs) - w)))
        return exact and err <= 1e-12, f"v={[float(x[0]) for x in v]}, inversion error {err:.2e}"

    return _timed(2, "RevDE hand check and invertibility", run)


def check_budget_arithmetic():
    def run():
        cfg = EvolutionConfig()
        log = dry_run(cfg)
        per_ind = log.assessments / log.evaluations
        used = learner.learn_brain(None, np.zeros(brain.GENOTYPE_SHAPE), lambda b, g: 0.0, cfg.learner,
                                   np.random.default_rng(0))[2]
        ok = log.evaluations == 775 and log.assessments == 775 * 280 and used == 280
        return ok, f"evaluations {log.evaluations}, assessments/individual {per_ind:g}, RevDE run used {used}"

    return _timed(3, "evaluation and assessment budgets", run)


def check_oscillator_fidelity():
    def run():
        net = brain.CpgNetwork((0,), np.array([1.0]), ())
        dt = 0.001
        steps = int(math.ceil(2 * math.pi / dt))
        err = 0.0
        e0 = net.x[0] ** 2 + net.y[0] ** 2
        drift = 0.0
        for k in range(1, steps + 1):
            brain.step_cpg(net, dt)
            err = max(err, abs(net.x[0] - math.sin(k * dt + math.pi / 4)))
            drift = max(drift, abs(net.x[0] ** 2 + net.y[0] ** 2 - e0) / e0)
        return err <= 2e-3 and drift < 0.01, f"max |x - sin| {err:.2e}, energy drift {drift:.2e}"

    return _timed(4, "uncoupled oscillator fidelity", run)


def _delannoy(m: int, n: int) -> int:
    if m == 0 or n == 0:
        return 1
    return _delannoy(m - 1, n) + _delannoy(m, n - 1) + _delannoy(m - 1, n - 1)


def check_genotype_maps():
    def run():
        cells = [(x, y) for x in range(-10, 11) for y in range(-10, 11) if (x, y) != (0, 0)]
        rows_ok = all(brain.joint_gene_row(c) == i for i, c in enumerate(cells)) and len(cells) == 440
        ball = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3) if abs(dx) + abs(dy) <= 2]
        nonzero = sorted(o for o in ball if o != (0, 0))
        cols_ok = all(brain.neighbour_column(o) == i + 1 for i, o in enumerate(nonzero))
        cols_ok &= brain.neighbour_column((0, 0)) == 0 and brain.neighbour_column((0, 0), stacked=True) == 13
        d22 = _delannoy(2, 2)
        ok = rows_ok and cols_ok and len(ball) == d22 == 13
        return ok, f"440 rows {'ok' if rows_ok else 'MISMATCH'}, 14 columns {'ok' if cols_ok else 'MISMATCH'}, ball {len(ball)} = D(2,2) {d22}"

    return _timed(5, "genotype map oracle", run)


def check_rotation_oracle():
    def run():
        worst = 0.0
        for revs in (1, 2, 3):
            for sign in (1, -1):
                yaw = sign * np.linspace(0, 2 * math.pi * revs, 151)
                q = np.column_stack([np.cos(yaw / 2), np.zeros(151), np.zeros(151), np.sin(yaw / 2)])
                worst = max(worst, abs(tasks.fitness_rotation(q) - sign * 2 * math.pi * revs))
        return worst <= 1e-6, f"max error {worst:.2e} over +-1..3 revolutions"

    return _timed(6, "rotation fitness oracle", run)


def check_mode_contracts(tasks_to_run=("rotation", "point_nav")):
    def run():
        problems = []
        for task in tasks_to_run:
            for mode in ("asexual", "sexual"):
                for inh in ("darwinian", "lamarckian"):
                    problems += _mode_contract_run(desk_config(task=task, brain_mode=mode, inheritance=inh, seed=11))
        return not problems, "all contracts hold" if not problems else "; ".join(problems[:5])

    return _timed(7, "Darwinian/Lamarckian/asexual contracts", run)


def _mode_contract_run(cfg: EvolutionConfig) -> list[str]:
    before, learned = [], []

    def spy(body, inherited, evaluate, config, rng, history=None):
        before.append(np.array(inherited, copy=True))
        best, perf, used = learner.learn_brain(body, inherited, evaluate, config, rng, history)
        learned.append(np.array(best, copy=True))
        return best, perf, used

    log = evolve(cfg, learner=spy)
    tag = f"{cfg.task}/{cfg.brain_mode}/{cfg.inheritance}"
    problems = []
    by_id = {ind.id: ind for ind in log.individuals}
    some_learning = False
    for k, ind in enumerate(log.individuals):
        some_learning |= not np.array_equal(before[k], learned[k])
        if cfg.inheritance == "darwinian" and not np.array_equal(ind.brain_genotype, before[k]):
            problems.append(f"{tag}: individual {ind.id} genotype changed")
        if cfg.inheritance == "lamarckian" and not np.array_equal(ind.brain_genotype, learned[k]):
            problems.append(f"{tag}: individual {ind.id} genotype not overwritten")
        if cfg.brain_mode == "asexual" and ind.parents:
            if len(ind.brain_parents) != 1:
                problems.append(f"{tag}: individual {ind.id} has brain parents {ind.brain_parents}")
                continue
            src = by_id[ind.brain_parents[0]]
            other_id = [p for p in ind.parents if p != src.id]
            kept = np.mean(ind.inherited_brain == src.brain_genotype)
            if not 0.15 <= kept <= 0.25:
                problems.append(f"{tag}: individual {ind.id} keeps {kept:.3f} of its parent's genes")
            if other_id:
                other = by_id[other_id[0]].brain_genotype
                differ = src.brain_genotype != other
                leaked = np.mean(ind.inherited_brain[differ] == other[differ]) if differ.any() else 0.0
                if leaked > 0.01:
                    problems.append(f"{tag}: individual {ind.id} shares {leaked:.3f} of the other parent's genes")
    if not some_learning:
        problems.append(f"{tag}: learning never changed a genotype, contract untested")
    return problems


def check_determinism():
    def run():
        from .experiment import run_single

        cfg = desk_config(task="point_nav", brain_mode="sexual", inheritance="lamarckian", seed=5)
        names = ("generations.csv", "population.csv", "learning.csv", "best_trajectory.csv")
        with tempfile.TemporaryDirectory() as tmp:
            a = run_single(cfg, Path(tmp) / "a", plots=False)
            b = run_single(cfg, Path(tmp) / "b", plots=False)
            same = [(a / n).read_bytes() == (b / n).read_bytes() for n in names]
        return all(same), ", ".join(f"{n} {'identical' if s else 'DIFFERS'}" for n, s in zip(names, same))

    return _timed(8, "byte-identical reruns", run)


def check_learner_sanity(trials: int = 100):
    def run():
        cfg = LearnerConfig(mu=10, generations=10)
        wins = 0
        for seed in range(trials):
            rng = np.random.default_rng(seed)
            target = rng.normal(size=10)
            start = rng.normal(size=10)
            f = lambda g: -float(np.sum((g - target) ** 2))  # noqa: E731
            res = learner.revde(start, f, cfg, rng)
            initial_best = res.history[0]["best"]
            wins += res.best_performance > initial_best
        return wins >= 95, f"{wins}/{trials} runs improved on the initial best"

    return _timed(9, "RevDE quadratic sanity", run)


def check_desk_grid(output_dir=None, budget_seconds: float = 1800.0):
    def run():
        from .experiment import load_config, run_grid

        overrides = {
            "evolution": {"population_size": 10, "offspring_per_gen": 5, "generations": 10},
            "learner": {"mu": DESK_LEARNER.mu, "generations": DESK_LEARNER.generations},
            "grid": {"repetitions": 3},
        }
        cfg = load_config(overrides=overrides)
        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(output_dir) if output_dir else Path(tmp)
            summary = run_grid(cfg, out)
            curves = [out / f"{t}_mean_fitness.svg" for t in ("point_nav", "rotation")]
            have_curves = all(p.exists() for p in curves)
        elapsed = time.perf_counter() - t0
        monotone = all(c["best_non_decreasing"] for c in summary["cells"].values())
        ok = elapsed < budget_seconds and have_curves and monotone and summary["runs"] == 24 and len(summary["cells"]) == 8
        return ok, (f"{summary['runs']} runs in {elapsed:.0f}s, curves {'written' if have_curves else 'MISSING'}, "
                    f"best fitness non-decreasing: {monotone}")

    return _timed(10, "desk-scale 2x2 grid smoke run", run)


QUICK_CHECKS = (
    check_worked_fitness_example,
    check_revde_hand_values,
    check_budget_arithmetic,
    check_oscillator_fidelity,
    check_genotype_maps,
    check_rotation_oracle,
    check_learner_sanity,
)
SLOW_CHECKS = (check_mode_contracts, check_determinism, check_desk_grid)


def run_all(quick: bool = False) -> list[CheckResult]:
    checks = QUICK_CHECKS if quick else QUICK_CHECKS + SLOW_CHECKS
    results = [c() for c in checks]
    return sorted(results, key=lambda r: r.number)
