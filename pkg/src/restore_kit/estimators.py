"""Moment summaries, error measures and one-dimensional quadrature oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rates import partial_rate_value

__all__ = [
    "MomentReport",
    "moment_report",
    "batch_means_se",
    "block_bootstrap_se",
    "rmse",
    "euclidean_distance",
    "adaptive_simpson",
    "negative_rate_intervals",
    "mu_star_moments_1d",
    "mu_star_moments_trapezoid",
]

N_BATCHES = 20


def batch_means_se(values, n_batches: int = N_BATCHES):
    """Batch-means standard error of the mean, columnwise.

    Returns None when there are fewer values than batches.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
        squeeze = True
    else:
        squeeze = False
    n = v.shape[0]
    if n < n_batches:
        return None
    size = n // n_batches
    means = v[: size * n_batches].reshape(n_batches, size, -1).mean(axis=1)
    se = means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return float(se[0]) if squeeze else se


def block_bootstrap_se(values, stat=np.mean, n_blocks: int = 50, n_boot: int = 400, seed: int = 0):
    """Standard error of ``stat`` by resampling contiguous blocks.

    Blocks keep the serial dependence of path-generated values.
    """
    v = np.asarray(values, dtype=float)
    size = v.shape[0] // n_blocks
    if size < 1:
        raise ValueError("fewer values than blocks")
    blocks = v[: size * n_blocks].reshape(n_blocks, size, *v.shape[1:])
    rng = np.random.default_rng(seed)
    reps = []
    for _ in range(n_boot):
        pick = blocks[rng.integers(n_blocks, size=n_blocks)]
        reps.append(stat(pick.reshape(-1, *v.shape[1:]), axis=0))
    return np.std(np.array(reps), axis=0, ddof=1)


@dataclass
class MomentReport:
    means: np.ndarray
    variances: np.ndarray
    second_moments: np.ndarray
    n: int
    std_errors: np.ndarray | None = None
    second_moment_std_errors: np.ndarray | None = None

    def to_json(self) -> dict:
        def lst(a):
            return None if a is None else [float(v) for v in a]

        return {
            "n": self.n,
            "means": lst(self.means),
            "variances": lst(self.variances),
            "second_moments": lst(self.second_moments),
            "std_errors": lst(self.std_errors),
            "second_moment_std_errors": lst(self.second_moment_std_errors),
        }


def moment_report(samples) -> MomentReport:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("no samples")
    means = x.mean(axis=0)
    second = (x * x).mean(axis=0)
    variances = np.maximum(x.var(axis=0), 0.0)
    return MomentReport(
        means=means,
        variances=variances,
        second_moments=second,
        n=x.shape[0],
        std_errors=batch_means_se(x),
        second_moment_std_errors=batch_means_se(x * x),
    )


def rmse(estimate, truth) -> float:
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


def _bisect_root(g, lo, hi, tol=1e-14):
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def negative_rate_intervals(target, bracket=(-10.0, 10.0), n_scan: int = 2001):
    """Intervals inside ``bracket`` where the partial rate is negative.

    Sign changes found on a uniform scan are refined by bisection.
    """
    if target.dim != 1:
        raise ValueError("only one-dimensional targets are supported")

    def kt(v):
        return partial_rate_value(target, np.array([v]))

    grid = np.linspace(bracket[0], bracket[1], n_scan)
    vals = np.array([kt(v) for v in grid])
    neg = vals < 0
    intervals = []
    i = 0
    while i < n_scan:
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 < n_scan and neg[j + 1]:
            j += 1
        left = grid[0] if i == 0 else _bisect_root(kt, grid[i - 1], grid[i])
        right = grid[-1] if j == n_scan - 1 else _bisect_root(kt, grid[j], grid[j + 1])
        intervals.append((float(left), float(right)))
        i = j + 1
    return intervals


def _mu_star_integrand(target, k):
    def f(v):
        x = np.array([v])
        kt = partial_rate_value(target, x)
        if kt >= 0:
            return 0.0
        return v ** k * -kt * math.exp(target.log_density(x))
    return f


def mu_star_moments_1d(target, tol: float = 1e-10, bracket=(-10.0, 10.0)):
    """First two moments of the minimal regeneration law of a 1-d target.

    Returns ``(m1, m2, c_min)`` where ``c_min`` integrates
    ``max(-kappa~, 0) pi~`` with the unnormalized density.
    """
    intervals = negative_rate_intervals(target, bracket)
    if not intervals:
        raise ValueError("partial rate has no negative region in the bracket")
    mass = [sum(adaptive_simpson(_mu_star_integrand(target, k), a, b, tol) for a, b in intervals)
            for k in range(3)]
    return mass[1] / mass[0], mass[2] / mass[0], mass[0]


def mu_star_moments_trapezoid(target, n: int = 20_001, bracket=(-10.0, 10.0)):
    """Same quantities as :func:`mu_star_moments_1d` by a composite
    trapezoid rule on the located support."""
    intervals = negative_rate_intervals(target, bracket)
    if not intervals:
        raise ValueError("partial rate has no negative region in the bracket")
    weight = _mu_star_integrand(target, 0)
    mass = np.zeros(3)
    for a, b in intervals:
        grid = np.linspace(a, b, n)
        w = np.array([weight(v) for v in grid])
        for k in range(3):
            mass[k] += np.trapezoid(w * grid ** k, grid)
    return mass[1] / mass[0], mass[2] / mass[0], mass[0]
