"""Matplotlib rendering of the report outputs.

Every function takes plain arrays, writes one PNG next to the delimited
output it mirrors, and returns the path.  Rendering is headless (Agg).
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_scatter",
    "render_histogram",
    "render_trace",
    "render_line_sweep",
]

_DPI = 150


def _class_color(cls: int):
    cmap = plt.get_cmap("tab10")
    return cmap(cls % 10)


def _save_atomic(fig, out_path: Path) -> Path:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_name(out_path.name + ".tmp")
    fig.savefig(tmp, dpi=_DPI, format="png")
    plt.close(fig)
    os.replace(tmp, out_path)
    return out_path


def render_scatter(coords: np.ndarray, labels: np.ndarray, out_path) -> Path:
    """2-D scatter of projected samples, one color per class."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(6, 5))
    for cls in np.unique(labels):
        pts = coords[:, labels == cls]
        ax.scatter(pts[0], pts[1], s=12, alpha=0.7, color=_class_color(int(cls)),
                   label=f"class {int(cls)}")
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save_atomic(fig, out_path)


def render_histogram(hist_rows, out_path) -> Path:
    """Per-class histogram bars from (bin_left, bin_right, label, count) rows."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    by_class: dict[int, list[tuple[float, float, int]]] = {}
    for left, right, label, count in hist_rows:
        by_class.setdefault(int(label), []).append((float(left), float(right), int(count)))
    for cls, rows in sorted(by_class.items()):
        lefts = [r[0] for r in rows]
        widths = [r[1] - r[0] for r in rows]
        counts = [r[2] for r in rows]
        ax.bar(lefts, counts, width=widths, align="edge", alpha=0.55,
               color=_class_color(cls), label=f"class {cls}")
    ax.set_xlabel("projected coordinate")
    ax.set_ylabel("count")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save_atomic(fig, out_path)


def render_trace(objectives, out_path) -> Path:
    """Objective value against iteration number."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(objectives)), objectives, marker="o", ms=4)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    fig.tight_layout()
    return _save_atomic(fig, out_path)


def render_line_sweep(rows_by_series, xlabel, ylabel, out_path) -> Path:
    """One line per series from {name: [(x, y), ...]} sweep tables."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rows in sorted(rows_by_series.items()):
        xs = [r[0] for r in rows]
        ys = [r[1] for r in rows]
        ax.plot(xs, ys, marker="o", ms=4, label=str(name))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save_atomic(fig, out_path)
