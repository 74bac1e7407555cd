"""Figure rendering for the media analysis (headless, file output only)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from baitscore.media import CATEGORIES, ProportionRow, TrendTable


def plot_proportions(rows: Sequence[ProportionRow], path: str | Path) -> Path:
    """Grouped bar chart of the per-class category mix."""
    path = Path(path)
    x = np.arange(len(CATEGORIES))
    n_groups = max(1, len(rows))
    width = 0.8 / n_groups
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for i, row in enumerate(rows):
        values = [row.proportions[cat] for cat in CATEGORIES]
        offset = (i - (n_groups - 1) / 2) * width
        label = row.key + (" (no detections)" if row.empty else "")
        ax.bar(x + offset, values, width=width, label=label)
    ax.set_xticks(x)
    ax.set_xticklabels(CATEGORIES, rotation=30, ha="right")
    ax.set_ylabel("proportion of detections")
    ax.set_title("Object-category proportions by class")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trend(
    trend: TrendTable,
    path: str | Path,
    categories: Sequence[str] | None = None,
) -> Path:
    """Per-category proportion lines as a function of score-bin center."""
    path = Path(path)
    chosen = tuple(categories) if categories else CATEGORIES
    unknown = set(chosen) - set(CATEGORIES)
    if unknown:
        raise ValueError(f"unknown categories: {sorted(unknown)}")
    fig, ax = plt.subplots(figsize=(10, 4.5))
    centers = list(trend.bin_centers)
    for cat in chosen:
        series = [row.proportions[cat] for row in trend.rows]
        ax.plot(centers, series, marker="o", label=cat)
    ax.set_xlabel("score bin center")
    ax.set_ylabel("proportion of detections")
    ax.set_xlim(0.0, 1.0)
    ax.set_title(f"Object-category proportions vs score ({trend.bins} bins)")
    ax.legend(ncols=2, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
