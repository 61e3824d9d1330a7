"""SVG figures: fitness curves with confidence bands, final-fitness boxplots,
trajectory overlays and morphology schematics."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "evolearn"
_SVG_META = {"Date": None, "Creator": "evolearn"}

KIND_COLOURS = {"core": "#f2c14e", "brick": "#5b8e7d", "active_hinge": "#c8553d"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def fitness_curve(series: dict, path, title: str = "") -> Path:
    """``series`` maps a label to ``(generations, values, half_width_or_None)``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (gens, values, half) in series.items():
        gens, values = np.asarray(gens), np.asarray(values)
        marker = "o" if len(gens) == 1 else None
        (line,) = ax.plot(gens, values, label=label, marker=marker)
        if half is not None and len(gens) > 1:
            ax.fill_between(gens, values - half, values + half, color=line.get_color(), alpha=0.2, linewidth=0,
                            gid=f"ci-band-{label}")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.set_title(title)
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def fitness_boxplot(groups: dict, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = list(groups)
    ax.boxplot([np.asarray(groups[k]) for k in labels], showmeans=True)
    ax.set_xticks(range(1, len(labels) + 1), labels, rotation=20, fontsize="small")
    ax.set_ylabel("final best fitness")
    ax.set_title(title)
    return _save(fig, path)


def trajectory_plot(trajectories, path, targets=None) -> Path:
    """Paths from (0, 0); the start is a square and targets are circles."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for n, traj in enumerate(trajectories):
        pos = traj.positions
        if len(pos) > 1 and np.any(np.abs(np.diff(pos, axis=0)) > 0):
            ax.plot(pos[:, 0], pos[:, 1], linewidth=1, gid=f"path-{n}")
    ax.plot([0.0], [0.0], marker="s", color="black", linestyle="none", label="start", gid="start")
    if targets:
        t = np.asarray(targets, dtype=float)
        ax.plot(t[:, 0], t[:, 1], marker="o", markerfacecolor="none", color="red", linestyle="none",
                markersize=10, label="targets", gid="targets")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def morphology_plot(body: dict, path) -> Path:
    """Top view of a serialised body on the 2D grid; stacked modules are annotated with z."""
    fig, ax = plt.subplots(figsize=(4, 4))
    mods = body["modules"]
    pos = {m["id"]: m["position"] for m in mods}
    for m in mods:
        if m["parent"] is not None:
            (x0, y0, _), (x1, y1, _) = pos[m["parent"]], m["position"]
            ax.plot([x0, x1], [y0, y1], color="grey", linewidth=1, zorder=1)
    for m in sorted(mods, key=lambda m: m["position"][2]):
        x, y, z = m["position"]
        ax.add_patch(plt.Rectangle((x - 0.4, y - 0.4), 0.8, 0.8, color=KIND_COLOURS[m["kind"]], zorder=2))
        if z:
            ax.text(x, y, f"z{z:+d}", ha="center", va="center", fontsize=7, zorder=3)
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    ax.set_xlim(min(xs) - 1, max(xs) + 1)
    ax.set_ylim(min(ys) - 1, max(ys) + 1)
    ax.set_aspect("equal")
    ax.grid(True, linewidth=0.3)
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in KIND_COLOURS.values()]
    ax.legend(handles, list(KIND_COLOURS), loc="upper right", fontsize="x-small")
    return _save(fig, path)
