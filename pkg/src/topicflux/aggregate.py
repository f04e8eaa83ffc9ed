"""Composite topic distributions and the scalar metrics built on them.

A composite distribution is the arithmetic mean of the member documents'
topic simplices, grouped by venue, by year, or by (venue, year). Groups
with no documents simply have no key; a missing cell is never a zero
vector. On top of the tables sit Hellinger distance, per-venue uniqueness
(the row sums of the pairwise Hellinger matrix), Shannon entropy, and a
per-year uniqueness series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

KEY_VENUE = "venue"
KEY_YEAR = "year"
KEY_VENUE_YEAR = "venue-year"
KEY_WINDOW = "window"

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class AggregateError(ValueError):
    """Raised for inputs that cannot be aggregated."""


@dataclass
class DistributionTable:
    """Keyed collection of K-simplices with the group sizes that produced them."""

    key_kind: str
    entries: dict
    support_counts: dict

    @property
    def n_topics(self) -> int:
        first = next(iter(self.entries.values()))
        return first.shape[0]

    def keys(self) -> list:
        return sorted(self.entries)


@dataclass
class MetricVector:
    """Scalar metric per key (uniqueness or entropy)."""

    metric_kind: str
    values: dict

    def keys(self) -> list:
        return sorted(self.values)


def _group_mean(gamma: np.ndarray, keys: Sequence) -> tuple[dict, dict]:
    if len(keys) != gamma.shape[0]:
        raise AggregateError(
            f"{gamma.shape[0]} simplices but {len(keys)} keys; inputs must be parallel"
        )
    groups: dict = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    entries, counts = {}, {}
    for key in sorted(groups):
        idx = groups[key]
        entries[key] = gamma[idx].mean(axis=0)
        counts[key] = len(idx)
    return entries, counts


def venue_distribution(gamma: np.ndarray, venues: Sequence[str]) -> DistributionTable:
    """Per-venue mean of the member documents' topic simplices."""
    entries, counts = _group_mean(np.asarray(gamma, dtype=float), list(venues))
    return DistributionTable(KEY_VENUE, entries, counts)


def year_distribution(gamma: np.ndarray, years: Sequence[int]) -> DistributionTable:
    """Per-year mean over all venues."""
    entries, counts = _group_mean(np.asarray(gamma, dtype=float), list(years))
    return DistributionTable(KEY_YEAR, entries, counts)


def venue_year_distribution(
    gamma: np.ndarray, venues: Sequence[str], years: Sequence[int]
) -> DistributionTable:
    """Per-(venue, year) mean; publication gaps appear as missing keys."""
    if len(venues) != len(years):
        raise AggregateError("venues and years must be parallel")
    entries, counts = _group_mean(np.asarray(gamma, dtype=float), list(zip(venues, years)))
    return DistributionTable(KEY_VENUE_YEAR, entries, counts)


def window_distribution(
    gamma: np.ndarray,
    years: Sequence[int],
    year_range: tuple[int, int],
    venues: Sequence[str] | None = None,
    venue: str | None = None,
) -> np.ndarray:
    """Mean simplex over the documents falling in an inclusive year window.

    Weighting is by document, not by year: a year with more articles pulls
    the window mean harder. Scope narrows to one venue when ``venue`` is given.
    """
    lo, hi = year_range
    if lo > hi:
        raise AggregateError(f"empty year range {lo}..{hi}")
    gamma = np.asarray(gamma, dtype=float)
    mask = np.array([lo <= y <= hi for y in years])
    if venue is not None:
        if venues is None:
            raise AggregateError("venue scope requested but no venue tags supplied")
        mask &= np.array([v == venue for v in venues])
    if not mask.any():
        raise AggregateError(f"no documents in window {lo}..{hi}" + (f" for venue {venue!r}" if venue else ""))
    return gamma[mask].mean(axis=0)


def hellinger(p: np.ndarray, q: np.ndarray) -> float:
    """Hellinger distance between two simplices: bounded [0, 1], 0 iff equal."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise AggregateError(f"simplex length mismatch: {p.shape} vs {q.shape}")
    return _INV_SQRT2 * math.sqrt(float(((np.sqrt(p) - np.sqrt(q)) ** 2).sum()))


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats with the 0*ln(0) := 0 convention."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def uniqueness(table: DistributionTable) -> MetricVector:
    """Per-venue sum of Hellinger distances to every venue (self term is 0)."""
    keys = table.keys()
    if len(keys) < 2:
        raise AggregateError(f"uniqueness needs >= 2 venues, got {len(keys)}")
    dists = _pairwise_hellinger(table, keys)
    values = {key: float(dists[i].sum()) for i, key in enumerate(keys)}
    return MetricVector("uniqueness", values)


def entropy_vector(table: DistributionTable) -> MetricVector:
    return MetricVector("entropy", {k: entropy(v) for k, v in table.entries.items()})


def _pairwise_hellinger(table: DistributionTable, keys: list) -> np.ndarray:
    n = len(keys)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = hellinger(table.entries[keys[i]], table.entries[keys[j]])
    return d


def uniqueness_over_time(table: DistributionTable) -> dict[str, dict[int, float]]:
    """Per-venue uniqueness recomputed within each year.

    Each year's uniqueness uses only the venues publishing that year; a venue
    absent in a year gets no value, and a year with fewer than two publishing
    venues yields none at all.
    """
    if table.key_kind != KEY_VENUE_YEAR:
        raise AggregateError(f"expected a venue-year table, got {table.key_kind!r}")
    by_year: dict[int, list[str]] = {}
    for venue, year in table.entries:
        by_year.setdefault(year, []).append(venue)
    series: dict[str, dict[int, float]] = {}
    for year in sorted(by_year):
        venues = sorted(by_year[year])
        if len(venues) < 2:
            continue
        sub = DistributionTable(
            KEY_VENUE,
            {v: table.entries[(v, year)] for v in venues},
            {v: table.support_counts[(v, year)] for v in venues},
        )
        for venue, value in uniqueness(sub).values.items():
            series.setdefault(venue, {})[year] = value
    return series


# ---------------------------------------------------------------------------
# CSV export. Floats print with 12 significant digits; keys sort ascending.


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def distribution_csv(table: DistributionTable) -> str:
    """Render a table as CSV: one key column (two for venue-year), then topics."""
    n_topics = table.n_topics
    topic_cols = ",".join(f"topic_{k + 1}" for k in range(n_topics))
    lines = []
    if table.key_kind == KEY_VENUE_YEAR:
        lines.append(f"venue,year,{topic_cols}")
        for venue, year in table.keys():
            row = table.entries[(venue, year)]
            lines.append(f"{venue},{year}," + ",".join(_fmt(x) for x in row))
    else:
        lines.append(f"key,{topic_cols}")
        for key in table.keys():
            lines.append(f"{key}," + ",".join(_fmt(x) for x in table.entries[key]))
    return "\n".join(lines) + "\n"


def metric_csv(metric: MetricVector, sort_by_value: bool = False, descending: bool = False) -> str:
    keys = metric.keys()
    if sort_by_value:
        keys.sort(key=lambda k: (metric.values[k], k), reverse=descending)
    lines = ["key,value"]
    for k in keys:
        lines.append(f"{k},{_fmt(metric.values[k])}")
    return "\n".join(lines) + "\n"


def load_distribution_csv(text: str, key_kind: str) -> DistributionTable:
    """Parse a distribution CSV back; rows are renormalized to exact simplices."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise AggregateError("empty distribution CSV")
    header = lines[0].split(",")
    n_key_cols = 2 if key_kind == KEY_VENUE_YEAR else 1
    entries: dict = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        key = (parts[0], int(parts[1])) if n_key_cols == 2 else parts[0]
        if key_kind == KEY_YEAR:
            key = int(key)
        row = np.array([float(x) for x in parts[n_key_cols:]])
        entries[key] = row / row.sum()
    if len(header) - n_key_cols != len(next(iter(entries.values()))):
        raise AggregateError("header/topic column mismatch")
    return DistributionTable(key_kind, entries, {k: 1 for k in entries})
