"""Figure rendering for the analysis exports.

Every plot is written next to its CSV so the delimited data stays the
canonical artifact and the image is just a view of it. Output is forced
through the Agg backend and stripped of date metadata, keeping renders
byte-identical for identical inputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aggregate import DistributionTable, MetricVector
from .cluster import Dendrogram
from .trends import (
    CATEGORY_DECREASING,
    CATEGORY_INCREASING,
    CATEGORY_NEUTRAL,
    TrendResult,
)

_CATEGORY_COLORS = {
    CATEGORY_DECREASING: "tab:red",
    CATEGORY_NEUTRAL: "tab:orange",
    CATEGORY_INCREASING: "tab:blue",
}


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, metadata={"Date": None, "Software": None})
    plt.close(fig)


def plot_year_topics(table: DistributionTable, path: Path) -> None:
    """Stacked topic proportions of the whole field over time."""
    years = table.keys()
    stack = np.array([table.entries[y] for y in years]).T
    fig, ax = plt.subplots(figsize=(10, 5))
    ax.stackplot(years, stack, labels=[f"topic {k + 1}" for k in range(stack.shape[0])])
    ax.set_xlabel("year")
    ax.set_ylabel("topic proportion")
    ax.set_xlim(years[0], years[-1])
    ax.set_ylim(0, 1)
    if stack.shape[0] <= 12:
        ax.legend(loc="center left", bbox_to_anchor=(1.0, 0.5), fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def plot_window_comparison(
    rows: list[tuple[int, float, float]], label_a: str, label_b: str, path: Path
) -> None:
    """Paired bars of top-topic proportions for two year windows."""
    topics = [f"topic {k + 1}" for k, _, _ in rows]
    a = [va for _, va, _ in rows]
    b = [vb for _, _, vb in rows]
    y = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.barh(y + 0.2, a, height=0.4, label=label_a, color="tab:gray")
    ax.barh(y - 0.2, b, height=0.4, label=label_b, color="tab:blue")
    ax.set_yticks(y, topics)
    ax.invert_yaxis()
    ax.set_xlabel("mean topic proportion")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_venue_heatmap(table: DistributionTable, entropies: MetricVector, path: Path) -> None:
    """Venue-by-topic heatmap with an entropy bar per venue, entropy-sorted."""
    venues = sorted(entropies.values, key=lambda v: (-entropies.values[v], v))
    mat = np.array([table.entries[v] for v in venues])
    fig, (ax, axe) = plt.subplots(
        1, 2, figsize=(11, 0.45 * len(venues) + 2), width_ratios=(4, 1), sharey=True
    )
    im = ax.imshow(mat, aspect="auto", cmap="Blues")
    ax.set_yticks(range(len(venues)), venues, fontsize=8)
    ax.set_xticks(range(mat.shape[1]), [str(k + 1) for k in range(mat.shape[1])], fontsize=7)
    ax.set_xlabel("topic")
    fig.colorbar(im, ax=ax, fraction=0.03, label="proportion")
    axe.barh(range(len(venues)), [entropies.values[v] for v in venues], color="tab:green")
    axe.set_xlabel("entropy (nats)")
    fig.tight_layout()
    _save(fig, path)


def plot_dendrogram(dendro: Dendrogram, path: Path) -> None:
    """Venue merge tree with cluster distance on the vertical axis."""
    n = len(dendro.leaves)
    children = {m.new_id: (m.node_a, m.node_b) for m in dendro.merges}
    heights = {i: 0.0 for i in range(n)}
    for m in dendro.merges:
        heights[m.new_id] = m.height
    xs: dict[int, float] = {}
    order: list[int] = []

    def place(node: int) -> None:
        if node < n:
            xs[node] = float(len(order))
            order.append(node)
            return
        a, b = children[node]
        place(a)
        place(b)
        xs[node] = 0.5 * (xs[a] + xs[b])

    place(dendro.root)
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * n), 5))
    for m in dendro.merges:
        xa, xb = xs[m.node_a], xs[m.node_b]
        ha, hb = heights[m.node_a], heights[m.node_b]
        ax.plot([xa, xa, xb, xb], [ha, m.height, m.height, hb], color="tab:blue", lw=1.2)
    ax.set_xticks([xs[i] for i in range(n)], dendro.leaves, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("cluster distance")
    ax.set_xlim(-0.5, n - 0.5)
    fig.tight_layout()
    _save(fig, path)


def plot_uniqueness_slopegraph(
    rows: list[tuple[str, float | None, float | None]], label_a: str, label_b: str, path: Path
) -> None:
    """Per-venue uniqueness in two windows, connected to show movement."""
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(rows) + 2))
    for venue, ua, ub in rows:
        if ua is not None and ub is not None:
            ax.plot([0, 1], [ua, ub], marker="o", ms=3, lw=1, label=venue)
        elif ua is not None:
            ax.plot([0], [ua], marker="*", ms=7)
        elif ub is not None:
            ax.plot([1], [ub], marker="*", ms=7)
    ax.set_xticks([0, 1], [label_a, label_b])
    ax.set_ylabel("uniqueness")
    ax.legend(loc="center left", bbox_to_anchor=(1.0, 0.5), fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def plot_venue_year(venue: str, years: list[int], matrix: np.ndarray, path: Path) -> None:
    """Stacked per-year topic proportions for one venue."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.stackplot(years, matrix.T)
    ax.set_title(venue)
    ax.set_xlabel("year")
    ax.set_ylabel("topic proportion")
    ax.set_xlim(years[0], years[-1] if len(years) > 1 else years[0] + 1)
    ax.set_ylim(0, 1)
    fig.tight_layout()
    _save(fig, path)


def plot_uniqueness_trends(
    series: dict[str, dict[int, float]], results: list[TrendResult], path: Path
) -> None:
    """Uniqueness over time per venue, line color keyed to the fitted trend."""
    category = {r.venue: r.category for r in results}
    fig, ax = plt.subplots(figsize=(10, 6))
    for venue in sorted(series):
        pts = series[venue]
        years = sorted(pts)
        color = _CATEGORY_COLORS.get(category.get(venue, CATEGORY_NEUTRAL))
        ax.plot(years, [pts[y] for y in years], color=color, lw=1.0, alpha=0.8, label=venue)
    ax.set_xlabel("year")
    ax.set_ylabel("uniqueness")
    ax.legend(loc="center left", bbox_to_anchor=(1.0, 0.5), fontsize=7)
    fig.tight_layout()
    _save(fig, path)
