"""Report figures written next to the delimited text outputs.

Every figure is rendered off-screen with fixed metadata so repeated runs
produce identical PNG bytes.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .formats import ResultRow  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "jipdatrack",
}

SERIES_COLORS = {"cross": "black", "lag1": "tab:red", "lag3": "tab:green", "lag5": "tab:blue"}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=path.suffix)
    os.close(fd)
    try:
        fig.savefig(tmp, metadata={"Software": None})
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def _trajectories(rows: Iterable[ResultRow]) -> dict[int, np.ndarray]:
    by_id: dict[int, list] = {}
    for r in sorted(rows, key=lambda r: (r.track_id, r.frame)):
        if r.position is not None:
            by_id.setdefault(r.track_id, []).append(r.position)
    return {k: np.asarray(v) for k, v in by_id.items()}


def plot_tracks(path, results: Sequence[ResultRow], ground_truth: Sequence[ResultRow] | None = None,
                title: str = "") -> Path:
    """Overlay tracker output (coloured) on ground-truth trajectories (grey)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if ground_truth:
            for n, xy in enumerate(_trajectories(ground_truth).values()):
                ax.plot(xy[:, 0], xy[:, 1], color="0.7", lw=3.0, zorder=1,
                        label="ground truth" if n == 0 else None)
        cmap = plt.get_cmap("tab10")
        for n, (k, xy) in enumerate(_trajectories(results).items()):
            ax.plot(xy[:, 0], xy[:, 1], ".", ms=1.5, color=cmap(n % 10), zorder=2)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(title)
        if ground_truth:
            ax.legend(loc="best")
        return _save(fig, path)


def plot_scores(path, table: Mapping[str, Mapping[str, float]], metric: str = "mota") -> Path:
    """Bar chart of one score across sequences."""
    names = list(table)
    values = [table[n][metric] for n in names]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(range(len(names)), values, color="tab:blue")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel(metric.upper())
        ax.set_ylim(min(0.0, min(values, default=0.0)), 1.0)
        fig.tight_layout()
        return _save(fig, path)


def plot_similarity_histograms(path, edges: np.ndarray, counts: Mapping[str, np.ndarray],
                               title: str = "") -> Path:
    """Normalised similarity distributions, one line per series."""
    centers = 0.5 * (edges[:-1] + edges[1:])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, c in counts.items():
            total = c.sum()
            density = c / total if total else c.astype(float)
            ax.plot(centers, density, color=SERIES_COLORS.get(name), label=name)
        ax.set_xlim(0.0, 1.0)
        ax.set_xlabel("similarity")
        ax.set_ylabel("fraction of pairs")
        ax.set_title(title)
        ax.legend(loc="upper left")
        return _save(fig, path)
