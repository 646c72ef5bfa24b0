"""Standard Brownian-motion restore sampler.

Between events the state moves as a Brownian motion. Potential
regenerations arrive at the constant dominating rate ``rate_bound`` and are
accepted with probability ``kappa(X) / rate_bound`` (Poisson thinning);
output times come from an independent rate ``output_rate`` Poisson process
or from a fixed mesh.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._random import Buffered, BufferedNormal, spawn_generators
from .targets import StdGaussian

__all__ = [
    "SimulationError",
    "EVENT_KINDS",
    "RestoreConfig",
    "RestoreRun",
    "simulate_standard",
    "simulate_minimal_gaussian_demo",
    "sample_minimal_gaussian_regeneration",
    "estimate_normalizing_constant",
    "ergodic_average",
    "tour_clt_variance",
    "coordinate",
    "coordinate_power",
    "EXCEEDANCE_WARN_FRACTION",
]

EVENT_KINDS = ("output", "regen-accept", "regen-reject", "add-accept", "add-reject")
OUTPUT, REGEN_ACCEPT, REGEN_REJECT, ADD_ACCEPT, ADD_REJECT = range(5)

EXCEEDANCE_WARN_FRACTION = 1e-3

_STREAMS = ("clocks", "brownian", "accept", "regen")


class SimulationError(RuntimeError):
    """A rate evaluated to NaN; carries the offending state and time."""

    def __init__(self, message, state=None, time=None):
        super().__init__(f"{message} at t={time!r}, state={None if state is None else list(state)}")
        self.state = state
        self.time = time


@dataclass
class RestoreConfig:
    """Settings for :func:`simulate_standard`.

    Exactly one of ``output_rate`` / ``output_spacing`` and exactly one of
    ``n_tours`` / ``horizon_time`` must be given.
    """

    mu: object
    regen_constant: float
    rate_bound: float
    output_rate: float | None = None
    output_spacing: float | None = None
    n_tours: int | None = None
    horizon_time: float | None = None
    seed: int = 0
    record_events: bool = True

    def validate(self):
        if not self.regen_constant > 0:
            raise ValueError("regen_constant must be positive")
        if not self.rate_bound > 0:
            raise ValueError("rate_bound must be positive")
        _check_output(self.output_rate, self.output_spacing)
        _check_horizon(self.n_tours, self.horizon_time)
        return self


def _check_output(rate, spacing):
    if (rate is None) == (spacing is None):
        raise ValueError("set exactly one of output_rate and output_spacing")
    if rate is not None and not rate > 0:
        raise ValueError("output_rate must be positive")
    if spacing is not None and not spacing > 0:
        raise ValueError("output_spacing must be positive")


def _check_horizon(n_tours, horizon_time):
    if (n_tours is None) == (horizon_time is None):
        raise ValueError("set exactly one of n_tours and horizon_time")
    if n_tours is not None and int(n_tours) < 1:
        raise ValueError("n_tours must be at least 1")
    if horizon_time is not None and not horizon_time > 0:
        raise ValueError("horizon_time must be positive")


@dataclass
class RestoreRun:
    """Output of one simulation.

    ``tour_lengths`` covers completed tours only; samples from a trailing
    incomplete tour carry tour index ``n_tours``.
    """

    times: np.ndarray
    tours: np.ndarray
    states: np.ndarray
    tour_starts: np.ndarray
    tour_lengths: np.ndarray
    total_time: float
    end_time: float
    event_times: np.ndarray
    event_kinds: np.ndarray
    regen_states: np.ndarray
    regen_times: np.ndarray
    initial_state: np.ndarray
    output_weight: float
    seed: int
    rate_evaluations: int = 0
    rate_exceedances: int = 0
    rate_bound: float = math.inf
    extra: dict = field(default_factory=dict)

    @property
    def n_tours(self) -> int:
        return int(self.tour_lengths.size)

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    @property
    def dim(self) -> int:
        return int(self.states.shape[1])

    @property
    def truncation_exceedance_frac(self) -> float:
        if self.rate_evaluations == 0:
            return 0.0
        return self.rate_exceedances / self.rate_evaluations

    def event_names(self):
        return [EVENT_KINDS[k] for k in self.event_kinds]


def _finish(d, times, tours, states, starts, lengths, total, end, ev_t, ev_k,
            regens, regen_t, x0, weight, seed, evals, exceed, bound):
    return RestoreRun(
        times=np.array(times, dtype=float),
        tours=np.array(tours, dtype=np.int64),
        states=np.array(states, dtype=float).reshape(len(states), d),
        tour_starts=np.array(starts, dtype=float),
        tour_lengths=np.array(lengths, dtype=float),
        total_time=total,
        end_time=end,
        event_times=np.array(ev_t, dtype=float),
        event_kinds=np.array(ev_k, dtype=np.int8),
        regen_states=np.array(regens, dtype=float).reshape(len(regens), d),
        regen_times=np.array(regen_t, dtype=float),
        initial_state=np.asarray(x0, dtype=float),
        output_weight=weight,
        seed=seed,
        rate_evaluations=evals,
        rate_exceedances=exceed,
        rate_bound=bound,
    )


def _restore_loop(d, rate_fn, regen_fn, rate_bound, output_rate, output_spacing,
                  n_tours, horizon_time, seed, record_events):
    """Shared event loop; ``regen_fn(rng)`` draws a regeneration state."""
    g = spawn_generators(seed, _STREAMS)
    expo = Buffered(g["clocks"].standard_exponential)
    unif = Buffered(g["accept"].random)
    normal = BufferedNormal(g["brownian"], d)
    regen_rng = g["regen"]
    sqrt = math.sqrt

    x = np.asarray(regen_fn(regen_rng), dtype=float)
    x0 = x
    t = 0.0
    tour = 0
    tour_start = 0.0
    total = 0.0
    times, tour_ids, states = [], [], []
    starts, lengths, regens, regen_t = [], [], [], []
    ev_t, ev_k = [], []
    evals = exceed = 0
    inv_k = 1.0 / rate_bound
    t_end = math.inf if horizon_time is None else float(horizon_time)
    n_target = math.inf if n_tours is None else int(n_tours)
    mesh = output_spacing is not None
    inv_out = 0.0 if mesh else 1.0 / output_rate
    k_out = 1
    next_out = output_spacing if mesh else math.inf

    while tour < n_target:
        tau = expo() * inv_k
        if mesh:
            is_output = t + tau >= next_out
            dt = next_out - t if is_output else tau
        else:
            s = expo() * inv_out
            # exact ties resolve in favour of output
            is_output = s <= tau
            dt = s if is_output else tau
        if t + dt > t_end:
            break
        if is_output:
            t = next_out if mesh else t + dt
            x = x + sqrt(dt) * normal()
            times.append(t)
            tour_ids.append(tour)
            states.append(x)
            if record_events:
                ev_t.append(t)
                ev_k.append(OUTPUT)
            if mesh:
                k_out += 1
                next_out = k_out * output_spacing
            continue
        t += dt
        x = x + sqrt(dt) * normal()
        k = rate_fn(x)
        evals += 1
        if k != k:
            raise SimulationError("regeneration rate is NaN", state=x, time=t)
        if k > rate_bound:
            exceed += 1
        if unif() * rate_bound < k:
            length = t - tour_start
            starts.append(tour_start)
            lengths.append(length)
            total += length
            tour_start = t
            tour += 1
            x = np.asarray(regen_fn(regen_rng), dtype=float)
            regens.append(x)
            regen_t.append(t)
            if record_events:
                ev_t.append(t)
                ev_k.append(REGEN_ACCEPT)
        elif record_events:
            ev_t.append(t)
            ev_k.append(REGEN_REJECT)

    end = t if horizon_time is None else t_end
    weight = output_spacing if mesh else 1.0 / output_rate
    run = _finish(d, times, tour_ids, states, starts, lengths, total, end, ev_t, ev_k,
                  regens, regen_t, x0, weight, seed, evals, exceed, rate_bound)
    _warn_exceedance(run)
    return run


def _warn_exceedance(run):
    frac = run.truncation_exceedance_frac
    if frac > EXCEEDANCE_WARN_FRACTION:
        warnings.warn(
            f"regeneration rate exceeded the bound {run.rate_bound:g} in "
            f"{frac:.2%} of evaluations; estimates are biased by truncation",
            RuntimeWarning,
            stacklevel=3,
        )


def simulate_standard(config: RestoreConfig, target) -> RestoreRun:
    """Simulate a restore process with a fixed regeneration law ``config.mu``.

    The rate is ``kappa~(x) + C~ mu(x) / pi~(x)`` truncated at
    ``config.rate_bound``. The result is a deterministic function of
    ``config.seed``.
    """
    config.validate()
    mu = config.mu
    if mu.dim != target.dim:
        raise ValueError(f"regeneration law has dimension {mu.dim}, target {target.dim}")
    log_c = math.log(config.regen_constant)
    exp = math.exp

    def rate(x):
        grad, lap = target.grad_and_laplacian(x)
        log_ratio = log_c + mu.logpdf(x) - target.log_density(x)
        ratio = exp(log_ratio) if log_ratio < 709.0 else math.inf
        return 0.5 * (float(grad @ grad) - lap) + ratio

    run = _restore_loop(target.dim, rate, mu.sample, config.rate_bound, config.output_rate,
                        config.output_spacing, config.n_tours, config.horizon_time,
                        config.seed, config.record_events)
    run.extra["regen_constant"] = config.regen_constant
    return run


def sample_minimal_gaussian_regeneration(rng) -> np.ndarray:
    """Draw from ``(1 - x^2) exp(-x^2/2)`` on [-1, 1] by rejection."""
    while True:
        x = rng.uniform(-1.0, 1.0)
        if rng.random() < (1.0 - x * x) * math.exp(-0.5 * x * x):
            return np.array([x])


def simulate_minimal_gaussian_demo(output_rate: float = 1000.0, n_tours: int | None = None,
                                   horizon_time: float | None = None, seed: int = 0,
                                   rate_bound: float | None = None,
                                   record_events: bool = True) -> RestoreRun:
    """Minimal restore for a standard normal target in one dimension.

    The rate is ``max((x^2 - 1)/2, 0)`` and regenerations come from the
    minimal law supported on [-1, 1]. ``rate_bound`` defaults to the
    ``1 - 1e-4`` chi-squared guidance level for d = 1.
    """
    from .rates import gaussian_truncation_level

    _check_output(output_rate, None)
    _check_horizon(n_tours, horizon_time)
    if rate_bound is None:
        rate_bound = gaussian_truncation_level(1, 1e-4)

    def rate(x):
        v = 0.5 * (float(x[0]) ** 2 - 1.0)
        return v if v > 0.0 else 0.0

    run = _restore_loop(1, rate, sample_minimal_gaussian_regeneration, rate_bound,
                        output_rate, None, n_tours, horizon_time, seed, record_events)
    run.extra["target"] = repr(StdGaussian(1))
    return run


def estimate_normalizing_constant(run: RestoreRun, regen_constant: float) -> float:
    """``C~ T / n`` from completed tours."""
    if run.n_tours == 0:
        raise ValueError("no completed tours; cannot estimate the normalizing constant")
    if run.truncation_exceedance_frac > EXCEEDANCE_WARN_FRACTION:
        warnings.warn(
            f"rate bound {run.rate_bound:g} was exceeded in "
            f"{run.truncation_exceedance_frac:.2%} of evaluations",
            RuntimeWarning,
            stacklevel=2,
        )
    return regen_constant * run.total_time / run.n_tours


def coordinate(i: int):
    """Vectorized ``f(x) = x[i]``."""
    def f(x):
        return np.asarray(x)[..., i]
    f.vectorized = True
    return f


def coordinate_power(i: int, k: int):
    def f(x):
        return np.asarray(x)[..., i] ** k
    f.vectorized = True
    return f


def _apply(f, states):
    if getattr(f, "vectorized", False):
        return np.asarray(f(states), dtype=float)
    return np.array([f(x) for x in states], dtype=float)


def ergodic_average(run: RestoreRun, f) -> float:
    """Mean of ``f`` over the recorded output states."""
    if run.n_samples == 0:
        raise ValueError("run has no output samples")
    return float(_apply(f, run.states).mean())


def tour_clt_variance(run: RestoreRun, f) -> float:
    """Asymptotic variance (per tour) of the ergodic average of ``f``.

    Per-tour integrals are approximated by output sums weighted by the
    output spacing (``1/output_rate`` or the mesh step).
    """
    n = run.n_tours
    if n < 2:
        raise ValueError("need at least two completed tours")
    values = _apply(f, run.states)
    fbar = values.mean()
    keep = run.tours < n
    z = np.bincount(run.tours[keep], weights=values[keep], minlength=n) * run.output_weight
    tau = run.tour_lengths
    return float(np.mean((z - tau * fbar) ** 2) / np.mean(tau) ** 2)
