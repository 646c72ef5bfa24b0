"""Adaptive Brownian-motion restore sampler.

Regenerations happen at the minimal rate ``max(kappa~, 0)``. A second
thinned Poisson process with rate ``max(-kappa~, 0)`` adds the current state
to a point-mass store, and regeneration states are drawn from the mixture

    t/(a+t) * Uniform(store) + a/(a+t) * mu0      (store non-empty)

so the regeneration law learns the minimal one as the store grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._random import Buffered, BufferedNormal, spawn_generators
from .rates import gaussian_truncation_level
from .restore import (
    ADD_ACCEPT,
    ADD_REJECT,
    OUTPUT,
    REGEN_ACCEPT,
    REGEN_REJECT,
    RestoreRun,
    SimulationError,
    _check_horizon,
    _finish,
    _warn_exceedance,
)

__all__ = [
    "AdaptiveConfig",
    "PointMassStore",
    "simulate_adaptive",
    "draw_regeneration",
    "maybe_add_point",
]

_STREAMS = ("clocks", "brownian", "accept", "regen", "store")


@dataclass
class AdaptiveConfig:
    """Settings for :func:`simulate_adaptive`.

    ``plus_bound`` dominates (and truncates) the regeneration rate and
    defaults to the chi-squared guidance level for ``eps = 1e-4``;
    ``minus_bound`` dominates the addition rate and defaults to ``d/2``.
    The horizon (``n_tours`` or ``horizon_time``) counts from the end of
    burn-in. Adaptation runs from time zero unless ``freeze_after`` is set.
    """

    mu0: object
    dominance_time: float = 1000.0
    plus_bound: float | None = None
    minus_bound: float | None = None
    output_rate: float = 10.0
    burn_in: float = 0.0
    n_tours: int | None = None
    horizon_time: float | None = None
    seed: int = 0
    freeze_after: float | None = None
    record_events: bool = True

    def resolved(self, d: int) -> "AdaptiveConfig":
        """Copy with the default bounds filled in for dimension ``d``."""
        plus = self.plus_bound if self.plus_bound is not None else gaussian_truncation_level(d, 1e-4)
        minus = self.minus_bound if self.minus_bound is not None else 0.5 * d
        out = AdaptiveConfig(**{**self.__dict__, "plus_bound": plus, "minus_bound": minus})
        out.validate()
        return out

    def validate(self):
        if not self.dominance_time > 0:
            raise ValueError("dominance_time must be positive")
        if self.plus_bound is not None and not self.plus_bound > 0:
            raise ValueError("plus_bound must be positive")
        if self.minus_bound is not None and not self.minus_bound > 0:
            raise ValueError("minus_bound must be positive")
        if not self.output_rate > 0:
            raise ValueError("output_rate must be positive")
        if not self.burn_in >= 0:
            raise ValueError("burn_in must be nonnegative")
        if self.freeze_after is not None and not self.freeze_after >= 0:
            raise ValueError("freeze_after must be nonnegative")
        _check_horizon(self.n_tours, self.horizon_time)
        return self


class PointMassStore:
    """Append-only multiset of states with uniform draws."""

    def __init__(self, dim: int):
        self.dim = dim
        self._points: list[np.ndarray] = []
        self._times: list[float] = []

    @property
    def count(self) -> int:
        return len(self._points)

    def __len__(self):
        return len(self._points)

    def append(self, x, time: float = math.nan):
        self._points.append(np.array(x, dtype=float))
        self._times.append(float(time))

    def uniform(self, rng: np.random.Generator) -> np.ndarray:
        return self._points[int(rng.integers(len(self._points)))]

    @property
    def points(self) -> np.ndarray:
        return np.array(self._points, dtype=float).reshape(len(self._points), self.dim)

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times, dtype=float)


def draw_regeneration(store: PointMassStore, mu0, t: float, a: float, rng) -> np.ndarray:
    """Draw from the current regeneration mixture at elapsed time ``t``."""
    if store.count == 0:
        return mu0.sample(rng)
    if rng.random() < t / (a + t):
        return store.uniform(rng)
    return mu0.sample(rng)


def maybe_add_point(store: PointMassStore, x, kappa_minus: float, n_bar: float, rng,
                    time: float = math.nan) -> bool:
    """Thinning step for the addition process.

    Accepts with probability ``min(kappa_minus, n_bar) / n_bar``. ``rng`` is a
    Generator or a zero-argument callable returning a uniform draw.
    """
    u = rng() if callable(rng) else rng.random()
    if u * n_bar < kappa_minus:
        store.append(x, time)
        return True
    return False


def simulate_adaptive(config: AdaptiveConfig, target):
    """Simulate the adaptive process; returns ``(run, store)``.

    Output is recorded only after ``burn_in``. Tour records restart at the
    end of burn-in, with the tour in progress at that moment counted from
    ``burn_in``.
    """
    cfg = config.resolved(target.dim)
    mu0 = cfg.mu0
    if mu0.dim != target.dim:
        raise ValueError(f"mu0 has dimension {mu0.dim}, target {target.dim}")
    d = target.dim
    g = spawn_generators(cfg.seed, _STREAMS)
    expo = Buffered(g["clocks"].standard_exponential)
    unif = Buffered(g["accept"].random)
    normal = BufferedNormal(g["brownian"], d)
    regen_rng = g["regen"]
    store_rng = g["store"]
    sqrt = math.sqrt

    kp, km, a = cfg.plus_bound, cfg.minus_bound, cfg.dominance_time
    inv_kp, inv_km, inv_out = 1.0 / kp, 1.0 / km, 1.0 / cfg.output_rate
    burn_in = float(cfg.burn_in)
    freeze = math.inf if cfg.freeze_after is None else float(cfg.freeze_after)
    t_end = math.inf if cfg.horizon_time is None else burn_in + float(cfg.horizon_time)
    n_target = math.inf if cfg.n_tours is None else int(cfg.n_tours)

    store = PointMassStore(d)
    x = np.asarray(mu0.sample(regen_rng), dtype=float)
    x0 = x
    t = 0.0
    adapting = freeze > 0.0
    weight_time = None  # frozen mixture time once adaptation stops
    burning = burn_in > 0.0
    tour = 0
    tour_start = 0.0
    total = 0.0
    burn_in_tours = 0
    times, tour_ids, states = [], [], []
    starts, lengths, regens, regen_t = [], [], [], []
    ev_t, ev_k = [], []
    evals = exceed = violations = add_evals = 0
    inf = math.inf

    while tour < n_target:
        tau = expo() * inv_kp
        zeta = expo() * inv_km if adapting else inf
        s = inf if burning else expo() * inv_out
        boundary = burn_in if burning else inf
        if adapting and freeze < boundary:
            boundary = freeze
        if t + min(tau, zeta, s) > boundary:
            # no event before the next phase change; clocks are memoryless
            dt = boundary - t
            if boundary > t_end:
                break
            x = x + sqrt(dt) * normal()
            t = boundary
            if burning and t >= burn_in:
                burning = False
                burn_in_tours = tour
                tour = 0
                tour_start = t
                total = 0.0
                starts, lengths = [], []
            if adapting and t >= freeze:
                adapting = False
                weight_time = t
            continue
        if s <= tau and s <= zeta:
            if t + s > t_end:
                break
            t += s
            x = x + sqrt(s) * normal()
            times.append(t)
            tour_ids.append(tour)
            states.append(x)
            if cfg.record_events:
                ev_t.append(t)
                ev_k.append(OUTPUT)
            continue
        dt = tau if tau <= zeta else zeta
        if t + dt > t_end:
            break
        t += dt
        x = x + sqrt(dt) * normal()
        grad, lap = target.grad_and_laplacian(x)
        kt = 0.5 * (float(grad @ grad) - lap)
        if kt != kt:
            raise SimulationError("partial regeneration rate is NaN", state=x, time=t)
        if tau <= zeta:
            evals += 1
            if kt > kp:
                exceed += 1
            if kt > 0.0 and unif() * kp < kt:
                length = t - tour_start
                starts.append(tour_start)
                lengths.append(length)
                total += length
                tour_start = t
                tour += 1
                x = np.asarray(
                    draw_regeneration(store, mu0, t if weight_time is None else weight_time,
                                      a, regen_rng),
                    dtype=float,
                )
                regens.append(x)
                regen_t.append(t)
                kind = REGEN_ACCEPT
            else:
                kind = REGEN_REJECT
        else:
            add_evals += 1
            k_minus = -kt if kt < 0.0 else 0.0
            if k_minus > km:
                violations += 1
            kind = ADD_ACCEPT if maybe_add_point(store, x, k_minus, km, unif, t) else ADD_REJECT
        if cfg.record_events:
            ev_t.append(t)
            ev_k.append(kind)

    if burning:
        burn_in_tours = tour
        tour, starts, lengths, total = 0, [], [], 0.0
    end = t if cfg.horizon_time is None else t_end
    run = _finish(d, times, tour_ids, states, starts, lengths, total, end, ev_t, ev_k,
                  regens, regen_t, x0, inv_out, cfg.seed, evals, exceed, kp)
    run.extra.update(
        n_points=store.count,
        bound_violation_count=violations,
        addition_evaluations=add_evals,
        burn_in=burn_in,
        burn_in_tours=burn_in_tours,
        dominance_time=a,
        plus_bound=kp,
        minus_bound=km,
    )
    _warn_exceedance(run)
    return run, store
