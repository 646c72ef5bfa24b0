"""Regularized incomplete gamma function and chi-squared quantiles."""

from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi2_cdf(q: float, d: int) -> float:
    return gamma_p(0.5 * d, 0.5 * q)


def chi2_sf(q: float, d: int) -> float:
    return gamma_q(0.5 * d, 0.5 * q)


def chi2_quantile(p: float, d: int, tol: float = 1e-10) -> float:
    """Quantile of chi-squared with ``d`` degrees of freedom by bisection.

    Works on whichever tail is smaller so that ``p`` close to 1 keeps its
    precision.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if p > 0.5:
        target, fn, increasing = 1.0 - p, chi2_sf, False
    else:
        target, fn, increasing = p, chi2_cdf, True
    lo, hi = 0.0, max(1.0, float(d))
    while (fn(hi, d) < target) if increasing else (fn(hi, d) > target):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        below = fn(mid, d) < target if increasing else fn(mid, d) > target
        if below:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
