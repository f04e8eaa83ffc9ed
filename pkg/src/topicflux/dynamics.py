"""Topic-dynamics metrics over venue-year (or field-year) topic series.

For one venue the series is its per-year composite simplices stacked in
observed-year order; publication gaps are skipped, and gap-adjacent years
count as adjacent observations. The eight metrics:

  range          largest minus smallest proportion per topic, with the
                 argmin/argmax topics reported (least and most prominent)
  change         latest-year minus first-year proportion; the most negative
                 strictly-negative and most positive strictly-positive topics
  volatility     sample standard deviation of adjacent-year differences;
                 argmin is the steadiest topic, argmax the most erratic
  peaks          the (topic, year) with the greatest proportion anywhere, and
                 the greatest topic at the most recent observed year

Argmin/argmax ties break toward the lowest topic index, then the earliest
year. Topics in the exclusion set are masked out of every metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .aggregate import KEY_VENUE_YEAR, KEY_YEAR, DistributionTable

FIELD_KEY = "__all__"


class DynamicsError(ValueError):
    """Raised when a series is too short for a metric."""


@dataclass
class TopicDynamicsReport:
    """Per-venue (or field-wide) summary; a metric is None when undefined."""

    key: str
    phi_min: tuple[int, float] | None = None
    phi_max: tuple[int, float] | None = None
    psi_dec: tuple[int, float] | None = None
    psi_inc: tuple[int, float] | None = None
    tau_min: tuple[int, float] | None = None
    tau_max: tuple[int, float] | None = None
    p_max: tuple[int, int, float] | None = None       # (topic, year, value)
    p_max_mry: tuple[int, int, float] | None = None
    excluded_topics: frozenset[int] = frozenset()


def venue_series(table: DistributionTable, venue: str) -> tuple[list[int], np.ndarray]:
    """Observed years (ascending) and the stacked (years x K) proportions."""
    if table.key_kind != KEY_VENUE_YEAR:
        raise DynamicsError(f"expected a venue-year table, got {table.key_kind!r}")
    years = sorted(y for v, y in table.entries if v == venue)
    if not years:
        raise DynamicsError(f"venue {venue!r} has no observed years")
    return years, np.array([table.entries[(venue, y)] for y in years])


def year_series(table: DistributionTable) -> tuple[list[int], np.ndarray]:
    if table.key_kind != KEY_YEAR:
        raise DynamicsError(f"expected a year table, got {table.key_kind!r}")
    years = sorted(table.entries)
    return years, np.array([table.entries[y] for y in years])


def _masked(matrix: np.ndarray, excluded: frozenset[int]) -> np.ndarray:
    out = matrix.astype(float).copy()
    for k in excluded:
        if 0 <= k < out.shape[1]:
            out[:, k] = np.nan
    if np.isnan(out).all():
        raise DynamicsError("every topic is excluded")
    return out


def _series_ranges(matrix: np.ndarray, excluded: frozenset[int]):
    if matrix.shape[0] < 2:
        raise DynamicsError("topic ranges need >= 2 observed years")
    m = _masked(matrix, excluded)
    rho = np.nanmax(m, axis=0) - np.nanmin(m, axis=0)
    lo = int(np.nanargmin(rho))
    hi = int(np.nanargmax(rho))
    return rho, (lo, float(rho[lo])), (hi, float(rho[hi]))


def _series_changes(matrix: np.ndarray, excluded: frozenset[int]):
    if matrix.shape[0] < 2:
        raise DynamicsError("topic changes need >= 2 observed years")
    m = _masked(matrix, excluded)
    diff = m[-1] - m[0]
    dec = inc = None
    neg = np.where(diff < 0)[0]
    if neg.size:
        k = int(neg[np.argmin(diff[neg])])
        dec = (k, float(diff[k]))
    pos = np.where(diff > 0)[0]
    if pos.size:
        k = int(pos[np.argmax(diff[pos])])
        inc = (k, float(diff[k]))
    return dec, inc


def _series_volatility(matrix: np.ndarray, excluded: frozenset[int]):
    if matrix.shape[0] < 3:
        raise DynamicsError("topic volatility needs >= 3 observed years")
    m = _masked(matrix, excluded)
    deltas = np.diff(m, axis=0)
    sd = np.std(deltas, axis=0, ddof=1)
    lo = int(np.nanargmin(sd))
    hi = int(np.nanargmax(sd))
    return (lo, float(sd[lo])), (hi, float(sd[hi]))


def _series_peaks(years: list[int], matrix: np.ndarray, excluded: frozenset[int]):
    if matrix.shape[0] < 1:
        raise DynamicsError("peak topics need >= 1 observed year")
    m = _masked(matrix, excluded)
    # Row-major argmax scans years ascending then topics ascending, which is
    # exactly the earliest-year, lowest-topic tie rule.
    flat = np.nanargmax(m)
    yi, k = divmod(int(flat), m.shape[1])
    p_max = (k, years[yi], float(m[yi, k]))
    last = m[-1]
    k_mry = int(np.nanargmax(last))
    p_mry = (k_mry, years[-1], float(last[k_mry]))
    return p_max, p_mry


def topic_ranges(table: DistributionTable, venue: str, excluded: Iterable[int] = ()):
    """Per-topic proportion ranges plus the least/most prominent topics."""
    years, matrix = venue_series(table, venue)
    return _series_ranges(matrix, frozenset(excluded))


def topic_changes(table: DistributionTable, venue: str, excluded: Iterable[int] = ()):
    """Most receded and most grown topics between first and latest year."""
    years, matrix = venue_series(table, venue)
    return _series_changes(matrix, frozenset(excluded))


def topic_volatility(table: DistributionTable, venue: str, excluded: Iterable[int] = ()):
    """Steadiest and most erratic topics by adjacent-difference deviation."""
    years, matrix = venue_series(table, venue)
    return _series_volatility(matrix, frozenset(excluded))


def peak_topics(table: DistributionTable, venue: str, excluded: Iterable[int] = ()):
    """Greatest proportion anywhere and at the most recent observed year."""
    years, matrix = venue_series(table, venue)
    return _series_peaks(years, matrix, frozenset(excluded))


def _series_report(key: str, years: list[int], matrix: np.ndarray, excluded: frozenset[int]) -> TopicDynamicsReport:
    report = TopicDynamicsReport(key=key, excluded_topics=excluded)
    if matrix.shape[0] >= 2:
        _, report.phi_min, report.phi_max = _series_ranges(matrix, excluded)
        report.psi_dec, report.psi_inc = _series_changes(matrix, excluded)
    if matrix.shape[0] >= 3:
        report.tau_min, report.tau_max = _series_volatility(matrix, excluded)
    report.p_max, report.p_max_mry = _series_peaks(years, matrix, excluded)
    return report


def venue_dynamics(table: DistributionTable, venue: str, excluded: Iterable[int] = ()) -> TopicDynamicsReport:
    """All eight metrics for one venue; too-short series leave metrics None."""
    years, matrix = venue_series(table, venue)
    return _series_report(venue, years, matrix, frozenset(excluded))


def field_dynamics(table: DistributionTable, excluded: Iterable[int] = ()) -> TopicDynamicsReport:
    """The same metrics over the all-venues year distributions."""
    years, matrix = year_series(table)
    return _series_report(FIELD_KEY, years, matrix, frozenset(excluded))


def all_reports(
    table: DistributionTable, year_table: DistributionTable, excluded: Iterable[int] = ()
) -> list[TopicDynamicsReport]:
    """One report per venue plus the combined field row, venue-sorted."""
    excluded = frozenset(excluded)
    venues = sorted({v for v, _ in table.entries})
    reports = [venue_dynamics(table, v, excluded) for v in venues]
    reports.append(field_dynamics(year_table, excluded))
    return reports


# ---------------------------------------------------------------------------
# CSV exports. Topic numbers print 1-based to match the topic_1..topic_K
# headers used by the distribution exports.

_METRIC_FIELDS = ("phi_min", "phi_max", "psi_dec", "psi_inc", "tau_min", "tau_max")


def _topic_label(k: int | None) -> str:
    return "" if k is None else str(k + 1)


def dynamics_csv(reports: list[TopicDynamicsReport]) -> str:
    lines = [
        "venue,phi_min,phi_max,psi_dec,psi_inc,tau_min,tau_max,"
        "p_max_topic,p_max_year,p_mry_topic,p_mry_year"
    ]
    for r in reports:
        cells = [r.key if r.key != FIELD_KEY else "all"]
        for name in _METRIC_FIELDS:
            val = getattr(r, name)
            cells.append(_topic_label(val[0]) if val else "")
        for peak in (r.p_max, r.p_max_mry):
            if peak:
                cells.append(_topic_label(peak[0]))
                cells.append(str(peak[1]))
            else:
                cells.extend(["", ""])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def tally_csv(reports: list[TopicDynamicsReport]) -> str:
    """Per metric, how many venues reported each topic (field row excluded)."""
    counts: dict[tuple[str, int], int] = {}
    for r in reports:
        if r.key == FIELD_KEY:
            continue
        for name in _METRIC_FIELDS:
            val = getattr(r, name)
            if val:
                counts[(name, val[0])] = counts.get((name, val[0]), 0) + 1
        for name, peak in (("p_max", r.p_max), ("p_max_mry", r.p_max_mry)):
            if peak:
                counts[(name, peak[0])] = counts.get((name, peak[0]), 0) + 1
    lines = ["metric,topic,venue_count"]
    for (name, topic), count in sorted(counts.items()):
        lines.append(f"{name},{topic + 1},{count}")
    return "\n".join(lines) + "\n"
