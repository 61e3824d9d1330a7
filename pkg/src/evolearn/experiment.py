"""Experiment runner: configuration files, single runs, the task x mode x
inheritance grid, aggregate CSVs and figures.

Run directories are append-only. A finished run holds a ``DONE`` marker and is
never rewritten; the grid reuses its CSVs instead.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import plotting
from .brain import save_genotype
from .cppn import CppnMutationParams
from .evolution import BRAIN_MODES, INHERITANCES, TASKS, EvolutionConfig, evolve
from .learner import LearnerConfig
from .sim import SAMPLE_RATE, SimParams

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
AGGREGATE_COLUMNS = (
    "generation", "runs", "mean_max_fitness", "se_max_fitness", "mean_mean_fitness", "se_mean_fitness",
)

DEFAULT_CONFIG: dict = {
    "evolution": {
        "population_size": 50,
        "offspring_per_gen": 25,
        "generations": 30,
        "brain_mode": "asexual",
        "inheritance": "darwinian",
        "task": "point_nav",
        "seed": 0,
        "brain_mutation_prob": 0.8,
        "brain_mutation_sigma": 0.5,
        "brain_init_range": 1.0,
    },
    "learner": {"mu": 10, "generations": 10, "F": 0.5, "CR": 0.9, "init_sigma": 0.5},
    "tasks": {
        "point_nav": {
            "targets": [[1.0, -1.0], [0.0, -2.0]],
            "reach_radius": 0.01,
            "omega": 0.1,
            "duration": 40.0,
            "steering_gain": 1.0,
        },
        "rotation": {"duration": 30.0},
    },
    "sim": {"sample_rate": SAMPLE_RATE, "forward_gain": 0.05, "turn_gain": 0.5, "cpg_dt": 0.001, "control_dt": 0.05},
    "cppn_mutation": {
        "weight_perturb_prob": 0.8,
        "weight_perturb_sigma": 0.1,
        "weight_reset_prob": 0.05,
        "add_connection_prob": 0.1,
        "add_node_prob": 0.05,
    },
    "grid": {
        "tasks": list(TASKS),
        "brain_modes": list(BRAIN_MODES),
        "inheritances": list(INHERITANCES),
        "repetitions": 10,
        "base_seed": 0,
    },
    "checkpoint_every": 5,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a table")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, overlaid by a JSON file, overlaid by ``overrides``; validated."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            text = Path(path).read_text()
            user = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    evolution_config(cfg)
    grid_from_config(cfg, Path("."))
    return cfg


def evolution_config(cfg: dict, **switches) -> EvolutionConfig:
    ev = dict(cfg["evolution"])
    ev.update(switches)
    sim = dict(cfg["sim"])
    if sim.pop("sample_rate") != SAMPLE_RATE:
        raise ConfigError(f"only {SAMPLE_RATE} Hz trajectory sampling is supported")
    try:
        return EvolutionConfig(
            **ev,
            learner=LearnerConfig(**cfg["learner"]),
            task_params=dict(cfg["tasks"][ev["task"]]),
            sim=SimParams(**sim),
            cppn_mutation=CppnMutationParams(**cfg["cppn_mutation"]),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ExperimentGrid:
    tasks: tuple[str, ...] = TASKS
    brain_modes: tuple[str, ...] = BRAIN_MODES
    inheritances: tuple[str, ...] = INHERITANCES
    repetitions: int = 10
    base_seed: int = 0
    output_dir: Path = Path("runs")

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        for name, allowed, values in (
            ("tasks", TASKS, self.tasks),
            ("brain_modes", BRAIN_MODES, self.brain_modes),
            ("inheritances", INHERITANCES, self.inheritances),
        ):
            bad = [v for v in values if v not in allowed]
            if bad or not values:
                raise ConfigError(f"grid {name} must be a non-empty subset of {allowed}, got {values}")

    @property
    def cells(self) -> list[tuple[str, str, str]]:
        return list(product(self.tasks, self.brain_modes, self.inheritances))

    def seed(self, cell_index: int, repetition: int) -> int:
        return self.base_seed + cell_index * self.repetitions + repetition

    def runs(self):
        for c, (task, mode, inh) in enumerate(self.cells):
            for r in range(self.repetitions):
                yield c, r, (task, mode, inh), self.output_dir / cell_name(task, mode, inh) / f"rep{r:02d}"


def cell_name(task: str, brain_mode: str, inheritance: str) -> str:
    return f"{task}_{brain_mode}_{inheritance}"


def grid_from_config(cfg: dict, output_dir) -> ExperimentGrid:
    g = cfg["grid"]
    try:
        return ExperimentGrid(
            tasks=tuple(g["tasks"]),
            brain_modes=tuple(g["brain_modes"]),
            inheritances=tuple(g["inheritances"]),
            repetitions=int(g["repetitions"]),
            base_seed=int(g["base_seed"]),
            output_dir=Path(output_dir),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _config_record(config: EvolutionConfig) -> dict:
    rec = asdict(config)
    rec["csv_schema_version"] = CSV_SCHEMA_VERSION
    return rec


def run_single(config: EvolutionConfig, run_dir, checkpoint_every: int = 0, plots: bool = True) -> Path:
    """Evolve one configuration and write its logs, best robot and figures to ``run_dir``."""
    run_dir = Path(run_dir)
    if (run_dir / "DONE").exists():
        raise FileExistsError(f"{run_dir} holds a completed run")
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(_config_record(config), indent=1, default=str))

    def checkpoint(gen, population):
        if checkpoint_every and gen % checkpoint_every == 0:
            ckdir = run_dir / "checkpoints"
            ckdir.mkdir(exist_ok=True)
            data = [
                {
                    "id": ind.id,
                    "fitness": ind.fitness,
                    "body_genome": ind.body_genome.to_dict(),
                    "brain_genotype": np.asarray(ind.brain_genotype).tolist(),
                }
                for ind in population
            ]
            (ckdir / f"gen{gen:03d}.json").write_text(json.dumps({"generation": gen, "population": data}))

    run = evolve(config, on_generation=checkpoint)
    run.write(run_dir)

    best = run.best
    task = config.make_task()
    traj = task.run(best.body, best.learned_brain, config.sim)
    traj.to_csv(run_dir / "best_trajectory.csv")
    (run_dir / "best_body.json").write_text(best.body.to_json())
    (run_dir / "best_genome.json").write_text(best.body_genome.to_json())
    save_genotype(best.learned_brain, run_dir / "best_brain.txt")
    if plots:
        plot_run(run_dir)
    (run_dir / "DONE").write_text("")
    return run_dir


def plot_run(run_dir) -> list[Path]:
    """Render fitness curve, best trajectory and best morphology from a run's CSV/JSON files."""
    run_dir = Path(run_dir)
    config = json.loads((run_dir / "config.json").read_text())
    targets = config["task_params"].get("targets") if config["task"] == "point_nav" else None
    if config["task"] == "point_nav" and targets is None:
        targets = DEFAULT_CONFIG["tasks"]["point_nav"]["targets"]
    gens = read_csv(run_dir / "generations.csv", ("generation", "max_fitness", "mean_fitness"))
    out = [
        plotting.fitness_curve(
            {"max": _series(gens, "max_fitness"), "mean": _series(gens, "mean_fitness")},
            run_dir / "fitness.svg",
            title=run_dir.name,
        ),
        plotting.trajectory_plot([_trajectory(run_dir / "best_trajectory.csv")], run_dir / "trajectory.svg", targets),
        plotting.morphology_plot(json.loads((run_dir / "best_body.json").read_text()), run_dir / "morphology.svg"),
    ]
    return out


def _trajectory(path):
    from .sim import Trajectory

    return Trajectory.from_csv(path)


def _series(rows, column) -> tuple[np.ndarray, np.ndarray, None]:
    return np.array([float(r["generation"]) for r in rows]), np.array([float(r[column]) for r in rows]), None


def read_csv(path, required=()) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return list(reader)


def _run_job(args):
    config, run_dir, checkpoint_every, plots = args
    if (Path(run_dir) / "DONE").exists():
        return run_dir
    return run_single(config, run_dir, checkpoint_every, plots)


def run_grid(cfg: dict, output_dir, workers: int = 1, plots: bool = True) -> dict:
    """Run every task x brain mode x inheritance cell for all repetitions.

    Returns a summary with per-cell final best-fitness statistics; the same
    data is written to ``summary.json`` alongside aggregate CSVs and figures.
    """
    grid = grid_from_config(cfg, output_dir)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if not output_dir.is_dir():
        raise ConfigError(f"{output_dir} is not a directory")
    jobs = []
    for c, r, (task, mode, inh), run_dir in grid.runs():
        config = evolution_config(cfg, task=task, brain_mode=mode, inheritance=inh, seed=grid.seed(c, r))
        jobs.append((config, run_dir, int(cfg["checkpoint_every"]), plots))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_run_job, jobs))
    else:
        for job in jobs:
            _run_job(job)
    return aggregate_grid(grid, plots=plots, targets=cfg["tasks"]["point_nav"]["targets"])


def aggregate_grid(grid: ExperimentGrid, plots: bool = True, targets=None) -> dict:
    out = grid.output_dir
    summary = {"cells": {}, "runs": 0}
    curves: dict[str, dict] = {t: {} for t in grid.tasks}
    finals: dict[str, dict] = {t: {} for t in grid.tasks}
    overlays: dict[str, list] = {}
    for task, mode, inh in grid.cells:
        name = cell_name(task, mode, inh)
        run_dirs = [out / name / f"rep{r:02d}" for r in range(grid.repetitions)]
        tables = [read_csv(d / "generations.csv", ("generation", "max_fitness", "mean_fitness")) for d in run_dirs]
        summary["runs"] += len(tables)
        maxes = np.array([[float(r["max_fitness"]) for r in t] for t in tables])
        means = np.array([[float(r["mean_fitness"]) for r in t] for t in tables])
        gens = np.array([int(r["generation"]) for r in tables[0]])
        rows = []
        for g in range(maxes.shape[1]):
            rows.append({
                "generation": int(gens[g]),
                "runs": len(tables),
                "mean_max_fitness": float(maxes[:, g].mean()),
                "se_max_fitness": _se(maxes[:, g]),
                "mean_mean_fitness": float(means[:, g].mean()),
                "se_mean_fitness": _se(means[:, g]),
            })
        _write_rows(out / name / "aggregate.csv", AGGREGATE_COLUMNS, rows)
        label = f"{mode} {inh}"
        ci = 1.96 * np.array([r["se_mean_fitness"] for r in rows]) if len(tables) > 1 else None
        curves[task][label] = (gens, np.array([r["mean_mean_fitness"] for r in rows]), ci)
        finals[task][label] = maxes[:, -1]
        overlays[name] = [_trajectory(d / "best_trajectory.csv") for d in run_dirs]
        summary["cells"][name] = {
            "final_max_fitness_mean": float(maxes[:, -1].mean()),
            "final_max_fitness_se": _se(maxes[:, -1]),
            "best_non_decreasing": bool(np.all(np.diff(maxes, axis=1) >= 0)),
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    if plots:
        if targets is None:
            targets = DEFAULT_CONFIG["tasks"]["point_nav"]["targets"]
        for task in grid.tasks:
            plotting.fitness_curve(curves[task], out / f"{task}_mean_fitness.svg", title=task)
            plotting.fitness_boxplot(finals[task], out / f"{task}_final_fitness.svg", title=task)
        for name, trajs in overlays.items():
            tg = targets if name.startswith("point_nav") else None
            plotting.trajectory_plot(trajs, out / name / "trajectories.svg", tg)
    return summary


def _se(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def _write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
