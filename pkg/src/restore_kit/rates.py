"""Regeneration rates for Brownian-motion restore processes.

The partial rate is ``kappa~ = (|grad U|^2 - lap U) / 2``. A fixed
regeneration law ``mu`` with constant ``C~`` gives the full rate
``kappa~ + C~ mu / pi~``; the minimal rate is the positive part of
``kappa~``. Density ratios are formed in log space.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .special import chi2_quantile

__all__ = [
    "RateBundle",
    "partial_rate",
    "partial_rate_value",
    "partial_rates",
    "split_rates",
    "full_rate",
    "estimate_regen_constant",
    "gaussian_truncation_level",
    "rate_quantiles",
    "write_quantile_csv",
    "DEFAULT_QUANTILE_LEVELS",
]

DEFAULT_QUANTILE_LEVELS = (0.5, 0.9, 0.99, 0.999, 0.9999)


@dataclass(frozen=True)
class RateBundle:
    kappa_tilde: float
    kappa_plus: float
    kappa_minus: float

    @classmethod
    def from_partial(cls, kt: float) -> "RateBundle":
        if kt > 0:
            return cls(kt, kt, 0.0)
        if kt < 0:
            return cls(kt, 0.0, -kt)
        return cls(0.0, 0.0, 0.0)


def partial_rate_value(target, x) -> float:
    grad, lap = target.grad_and_laplacian(x)
    return 0.5 * (float(grad @ grad) - lap)


def partial_rate(target, x) -> RateBundle:
    x = target.check_state(x)
    return RateBundle.from_partial(partial_rate_value(target, x))


def partial_rates(target, xs) -> np.ndarray:
    """Partial rates at each row of ``xs``, vectorized where the target allows."""
    grads, laps = target.grad_and_laplacian_many(xs)
    return 0.5 * (np.einsum("ij,ij->i", grads, grads) - laps)


def split_rates(kt) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise positive and negative parts of partial rates."""
    kt = np.asarray(kt, dtype=float)
    return np.maximum(kt, 0.0), np.maximum(-kt, 0.0)


def full_rate(target, mu, c_tilde: float, x, k_hat: float = math.inf) -> float:
    """``min(kappa~(x) + C~ mu(x) / pi~(x), k_hat)``."""
    if not c_tilde > 0:
        raise ValueError(f"regeneration constant must be positive, got {c_tilde}")
    x = np.asarray(x, dtype=float)
    log_ratio = math.log(c_tilde) + mu.logpdf(x) - target.log_density(x)
    kt = partial_rate_value(target, x)
    # exp overflows to inf, which the clamp absorbs; underflow gives 0
    ratio = math.exp(log_ratio) if log_ratio < 709.0 else math.inf
    return min(kt + ratio, k_hat)


def estimate_regen_constant(samples, target, mu) -> float:
    """Smallest ``C~`` making the full rate nonnegative on ``samples``.

    Returns ``max_i (-kappa~(x_i)) pi~(x_i) / mu(x_i)`` over samples with
    negative partial rate. The result absorbs the normalizing constant of
    ``pi~``.
    """
    best = -math.inf
    for x in np.asarray(samples, dtype=float).reshape(len(samples), -1):
        kt = partial_rate_value(target, x)
        if kt < 0:
            best = max(best, math.log(-kt) + target.log_density(x) - mu.logpdf(x))
    if best == -math.inf:
        raise ValueError("partial rate nonnegative on sample; C~=0 suffices")
    return math.exp(best)


def gaussian_truncation_level(d: int, eps: float) -> float:
    """Level ``K`` with ``P[kappa+(X) < K] = 1 - eps`` for ``X ~ N(0, I_d)``.

    For a standard Gaussian target ``kappa~ = (|x|^2 - d)/2``, so the level
    is ``(q - d) / 2`` with ``q`` the ``1 - eps`` quantile of chi-squared
    on ``d`` degrees of freedom.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if int(d) < 1:
        raise ValueError("d must be a positive integer")
    return 0.5 * (chi2_quantile(1.0 - eps, int(d), tol=1e-13) - d)


def rate_quantiles(samples, rate, levels=DEFAULT_QUANTILE_LEVELS):
    """Empirical quantiles of ``rate`` over ``samples``.

    Returns ``(table, mean)`` where ``table`` is a list of ``(p, value)``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] == 0:
        raise ValueError("need at least one sample")
    values = np.array([rate(x) for x in samples.reshape(samples.shape[0], -1)])
    qs = np.quantile(values, levels)
    return [(float(p), float(q)) for p, q in zip(levels, qs)], float(values.mean())


def write_quantile_csv(path, table):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "value"])
        for p, v in table:
            w.writerow([repr(p), repr(v)])
