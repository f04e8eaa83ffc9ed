"""Linear trend of per-venue uniqueness over time.

Closed-form OLS on (year, uniqueness) points with a two-sided t-test of the
slope against zero. The p-value comes from the regularized incomplete beta
function so no statistics package is involved; an exact fit (zero residual
variance) short-circuits the test. Fitted venues are classed as decreasing,
neutral, or increasing from the slope sign and significance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .mathutil import betainc_reg

SIGNIFICANCE_LEVEL = 0.05

CATEGORY_DECREASING = "decreasing"
CATEGORY_NEUTRAL = "neutral"
CATEGORY_INCREASING = "increasing"


class TrendError(ValueError):
    """Raised for series that cannot be fitted."""


@dataclass
class TrendResult:
    venue: str
    m: float                  # slope per year
    intercept: float
    p_value: float
    n: int
    exact_fit: bool
    significant: bool
    category: str


def ols_fit(xs: Sequence[float], ys: Sequence[float], venue: str = "") -> TrendResult:
    """Least-squares line with a two-sided slope significance test.

    Needs >= 3 points and non-degenerate xs. A flat series returns m = 0 with
    p = 1; a noiseless sloped line returns p = 0 with the exact-fit flag set.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise TrendError("xs and ys must be equal-length 1-D sequences")
    n = x.size
    if n < 3:
        raise TrendError(f"need >= 3 points for a slope test, got {n}")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise TrendError("xs are all equal; slope is undefined")
    syy = float(yc @ yc)
    yscale = float(np.abs(y).max()) + 1.0
    if syy <= n * (1e-13 * yscale) ** 2:
        # Constant response: flat line, nothing to test.
        m, intercept, p, exact = 0.0, float(y.mean()), 1.0, True
    else:
        sxy = float(xc @ yc)
        m = sxy / sxx
        intercept = float(y.mean() - m * x.mean())
        resid = yc - m * xc
        rss = float(resid @ resid)
        df = n - 2
        if rss <= 1e-12 * syy:
            # The line explains everything; the slope is exact, not estimated.
            p, exact = 0.0, True
        else:
            se = math.sqrt(rss / df / sxx)
            t = m / se
            p = betainc_reg(0.5 * df, 0.5, df / (df + t * t))
            p = min(max(p, 0.0), 1.0)
            exact = False
    result = TrendResult(
        venue, m, intercept, p, n, exact, p < SIGNIFICANCE_LEVEL, CATEGORY_NEUTRAL
    )
    result.category = classify_trend(result)
    return result


def classify_trend(result: TrendResult, slope_eps: float = 0.0) -> str:
    """Significant negative slopes decrease, significant positive increase."""
    if result.significant and result.m < -slope_eps:
        return CATEGORY_DECREASING
    if result.significant and result.m > slope_eps:
        return CATEGORY_INCREASING
    return CATEGORY_NEUTRAL


def trend_suite(
    series: Mapping[str, Mapping[int, float]], slope_eps: float = 0.0
) -> tuple[list[TrendResult], list[str]]:
    """Fit every venue's uniqueness-over-time series.

    Returns the fitted results (venue-sorted) and the venues with fewer than
    three year points, which cannot carry a slope test.
    """
    results: list[TrendResult] = []
    unfittable: list[str] = []
    for venue in sorted(series):
        points = series[venue]
        if len(points) < 3:
            unfittable.append(venue)
            continue
        years = sorted(points)
        res = ols_fit(years, [points[y] for y in years], venue=venue)
        res.category = classify_trend(res, slope_eps)
        results.append(res)
    return results, unfittable


def trends_csv(results: list[TrendResult], unfittable: Sequence[str] = ()) -> str:
    """Table 6-shaped export; slopes in scientific notation, 4 significant digits."""
    lines = ["journal,m,p_value,significant,category"]
    for r in results:
        lines.append(
            f"{r.venue},{r.m:.3e},{r.p_value:.6g},{str(r.significant).lower()},{r.category}"
        )
    for venue in sorted(unfittable):
        lines.append(f"{venue},,,,unfittable")
    return "\n".join(lines) + "\n"
