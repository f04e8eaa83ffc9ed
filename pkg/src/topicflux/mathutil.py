"""Special functions used by the model and trend code.

Everything here is self-contained on purpose: the fitting code and the
t-test must not share a code path with the scipy-based oracles the test
suite checks them against.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["digamma", "gammaln", "betainc_reg", "logsumexp"]

# Lanczos coefficients, g=7, double precision.
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

_SHIFTS = np.arange(8.0)


def _gammaln_scalar(x: float) -> float:
    if x <= 0.0:
        raise ValueError(f"gammaln requires x > 0, got {x}")
    z = x - 1.0
    a = _LANCZOS[0]
    for i in range(1, 9):
        a += _LANCZOS[i] / (z + i)
    t = z + 7.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(a)


def gammaln(x):
    """Log of the gamma function for x > 0 (scalar or array)."""
    if np.isscalar(x):
        return _gammaln_scalar(float(x))
    z = np.asarray(x, dtype=float) - 1.0
    if np.any(z <= -1.0):
        raise ValueError("gammaln requires x > 0")
    a = np.full_like(z, _LANCZOS[0])
    for i in range(1, 9):
        a += _LANCZOS[i] / (z + i)
    t = z + 7.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(a)


def _digamma_scalar(x: float) -> float:
    if x <= 0.0:
        raise ValueError("digamma requires x > 0")
    acc = 0.0
    # psi(x) = psi(x + 1) - 1/x, shifted until the asymptotic series is sharp
    while x < 8.0:
        acc -= 1.0 / x
        x += 1.0
    r = 1.0 / x
    r2 = r * r
    tail = r2 * (1.0 / 12.0 - r2 * (1.0 / 120.0 - r2 * (1.0 / 252.0 - r2 * (1.0 / 240.0 - r2 / 132.0))))
    return acc + math.log(x) - 0.5 * r - tail


def digamma(x):
    """Digamma for x > 0: fixed recurrence shift, then asymptotic series."""
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return _digamma_scalar(float(x))
    v = np.asarray(x, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("digamma requires x > 0")
    # Unconditional 8-term shift keeps every argument past 8 without branching.
    acc = (1.0 / (v[..., None] + _SHIFTS)).sum(axis=-1)
    v = v + 8.0
    r = 1.0 / v
    r2 = r * r
    tail = r2 * (1.0 / 12.0 - r2 * (1.0 / 120.0 - r2 * (1.0 / 252.0 - r2 * (1.0 / 240.0 - r2 / 132.0))))
    return np.log(v) - 0.5 * r - tail - acc


def logsumexp(a: np.ndarray, axis=None):
    """Stable log(sum(exp(a))) along an axis."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out if axis is None else np.squeeze(out, axis=axis)


def _betacf(a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        _gammaln_scalar(a + b)
        - _gammaln_scalar(a)
        - _gammaln_scalar(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


