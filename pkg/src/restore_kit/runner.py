"""Execute a parsed :class:`~restore_kit.config.RunSpec` and write its artifacts."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import io
from .adaptive import AdaptiveConfig, simulate_adaptive
from .config import RunSpec
from .data import load_logistic_dataset, prepare_logistic_dataset, synthetic_logistic_dataset, breast_cancer_path
from .distributions import GaussianReference
from .estimators import moment_report
from .rates import (
    DEFAULT_QUANTILE_LEVELS,
    estimate_regen_constant,
    full_rate,
    gaussian_truncation_level,
    partial_rate_value,
    rate_quantiles,
    write_quantile_csv,
)
from .restore import (
    RestoreConfig,
    coordinate,
    estimate_normalizing_constant,
    simulate_minimal_gaussian_demo,
    simulate_standard,
    tour_clt_variance,
)
from .rwm import RwmConfig, rwm_run, tune_scale
from .targets import (
    Gaussian,
    GaussianMixture2,
    LGCP_SEED,
    LogGaussianCox,
    MultivariateT,
    PumpHierarchical,
    StdGaussian,
    TransformedBeta,
    logistic_posterior,
)
from .transform import AffineMap, laplace_approximate, transform_target

__all__ = ["build_target", "build_regeneration", "dispatch", "pilot_samples"]


def _logistic_data(params):
    src = params["data"]
    if src == "breast_cancer":
        return load_logistic_dataset(breast_cancer_path())
    if src == "synthetic":
        X, y = synthetic_logistic_dataset(n=params["synthetic_n"], seed=params["synthetic_seed"])
        return prepare_logistic_dataset(X, y)
    return load_logistic_dataset(src)


def build_target(name: str, params: dict):
    p = params
    if name == "std_gaussian":
        return StdGaussian(p["dim"], log_scale=p["log_scale"])
    if name == "gaussian":
        mean = p["mean"]
        d = mean.size
        cov = p["cov"]
        if cov.size == 1:
            cov = float(cov[0]) * np.eye(d)
        elif cov.size == d:
            cov = np.diag(cov)
        elif cov.size == d * d:
            cov = cov.reshape(d, d)
        else:
            raise ValueError(f"cov needs 1, {d} or {d * d} entries, got {cov.size}")
        return Gaussian(mean, cov, log_scale=p["log_scale"])
    if name == "transformed_beta":
        return TransformedBeta()
    if name == "multivariate_t":
        return MultivariateT(nu=p["nu"], d=p["dim"])
    if name == "gaussian_mixture":
        return GaussianMixture2() if p["weights"] is None else GaussianMixture2(weights=p["weights"])
    if name == "pump":
        return PumpHierarchical(c1=p["c1"], c2=p["c2"], c3=p["c3"])
    if name == "lgcp":
        seed = LGCP_SEED if p["data_seed"] is None else p["data_seed"]
        return LogGaussianCox(n=p["grid"], seed=seed)
    if name == "logistic":
        return logistic_posterior(_logistic_data(p), prior_var=p["prior_var"])
    raise ValueError(f"unknown target {name!r}")


def build_regeneration(params: dict, d: int) -> GaussianReference:
    """Gaussian regeneration law; defaults to ``N(0, I)``."""
    mean = params.get("mean")
    var = params.get("variance")
    mean = np.zeros(d) if mean is None else np.asarray(mean, float)
    if mean.size == 1:
        mean = np.full(d, float(mean[0]))
    if mean.size != d:
        raise ValueError(f"regeneration mean has {mean.size} entries, target dimension {d}")
    if var is None:
        cov = np.eye(d)
    elif var.size == 1:
        cov = float(var[0]) * np.eye(d)
    elif var.size == d:
        cov = np.diag(var)
    else:
        raise ValueError(f"regeneration variance has {var.size} entries, target dimension {d}")
    return GaussianReference(mean, cov)


def pilot_samples(target, seed: int, steps: int, thin: int, burn_in: int, scale="auto", x0=None):
    """RWM samples used for regeneration-constant estimates and rate quantiles."""
    if scale == "auto":
        scale = tune_scale(target, seed=seed, x0=x0)
    res = rwm_run(target, RwmConfig(scale, steps, thin=thin, burn_in_steps=burn_in, seed=seed), x0=x0)
    return res, scale


def _prepare(spec: RunSpec, out: Path):
    """Base target, sampling target (possibly transformed) and the map."""
    base = build_target(spec.target_name, spec.target_params)
    tr = spec.transform
    if not tr.get("enabled"):
        return base, base, None
    if tr.get("map"):
        amap = AffineMap.load(tr["map"])
        if amap.dim != base.dim:
            raise ValueError(f"frozen map has dimension {amap.dim}, target {base.dim}")
    else:
        amap = laplace_approximate(base, grad_tol=tr["grad_tol"])
    amap.save(out / "transform.json")
    return base, transform_target(base, amap), amap


def _lst(a):
    return None if a is None else [float(v) for v in np.atleast_1d(a)]


def _moments(states) -> dict:
    if len(states) == 0:
        return {"means": None, "variances": None, "std_errors": None, "second_moments": None}
    rep = moment_report(states)
    return {
        "means": _lst(rep.means),
        "variances": _lst(rep.variances),
        "second_moments": _lst(rep.second_moments),
        "std_errors": _lst(rep.std_errors),
    }


def _run_summary(spec, run, states, z_estimate=None) -> dict:
    summary = {
        "command": spec.command,
        "target": spec.target_name,
        "seed": spec.seed,
        "dim": run.dim,
        "n_samples": run.n_samples,
        "n_tours": run.n_tours,
        "total_time": float(run.total_time),
        "z_estimate": z_estimate,
        "truncation_exceedance_frac": float(run.truncation_exceedance_frac),
        "rate_bound": float(run.rate_bound),
    }
    summary.update(_moments(states))
    # tour-based asymptotic variance for the first coordinate
    summary["sigma2_f"] = tour_clt_variance(run, coordinate(0)) if run.n_tours >= 2 else None
    return summary


def _write_run(out, spec, run, states, regen_states):
    io.write_samples_csv(out / "samples.csv", run.times, run.tours, states)
    if spec_records_events(spec):
        io.write_events_csv(out / "events.csv", run.event_times, run.event_kinds)
    io.write_regenerations_csv(out / "regenerations.csv", run.regen_times, regen_states)


def spec_records_events(spec) -> bool:
    return bool(spec.engine.get("record_events", True))


def _horizon(e):
    return e.get("n_tours"), e.get("horizon_time")


def _resolve_constant(spec, target, mu):
    e = spec.engine
    if e["regen_constant"] != "auto":
        return float(e["regen_constant"]), "config"
    res, _ = pilot_samples(target, spec.seed, e["pilot_steps"], e["pilot_thin"], e["pilot_burn_in"])
    return estimate_regen_constant(res.samples, target, mu) * e["safety_factor"], "pilot"


def _run_standard(spec, out):
    base, target, amap = _prepare(spec, out)
    e = spec.engine
    mu = build_regeneration(spec.regeneration, target.dim)
    c, c_src = _resolve_constant(spec, target, mu)
    n, horizon = _horizon(e)
    cfg = RestoreConfig(mu=mu, regen_constant=c, rate_bound=e["rate_bound"],
                        output_rate=e["output_rate"], output_spacing=e["output_spacing"],
                        n_tours=n, horizon_time=horizon, seed=spec.seed,
                        record_events=e["record_events"])
    run = simulate_standard(cfg, target)
    states = run.states if amap is None else amap.to_original(run.states)
    regens = run.regen_states if amap is None else amap.to_original(run.regen_states)
    z = estimate_normalizing_constant(run, c) if run.n_tours else None
    _write_run(out, spec, run, states, regens)
    summary = _run_summary(spec, run, states, z)
    summary.update(regen_constant=c, regen_constant_source=c_src)
    return summary


def _run_adaptive(spec, out):
    base, target, amap = _prepare(spec, out)
    e = spec.engine
    mu0 = build_regeneration(spec.regeneration, target.dim)
    n, horizon = _horizon(e)
    cfg = AdaptiveConfig(mu0=mu0, dominance_time=e["dominance_time"], plus_bound=e["plus_bound"],
                         minus_bound=e["minus_bound"], output_rate=e["output_rate"],
                         burn_in=e["burn_in"], n_tours=n, horizon_time=horizon, seed=spec.seed,
                         freeze_after=e["freeze_after"], record_events=e["record_events"])
    run, store = simulate_adaptive(cfg, target)
    to_orig = (lambda a: a) if amap is None else amap.to_original
    states = to_orig(run.states)
    _write_run(out, spec, run, states, to_orig(run.regen_states))
    io.write_points_csv(out / "points.csv", store.times, to_orig(store.points))
    summary = _run_summary(spec, run, states)
    summary.update(
        n_points=int(store.count),
        bound_violation_count=int(run.extra["bound_violation_count"]),
        plus_bound=float(run.extra["plus_bound"]),
        minus_bound=float(run.extra["minus_bound"]),
        dominance_time=float(run.extra["dominance_time"]),
        burn_in=float(run.extra["burn_in"]),
    )
    return summary


def _run_minimal_demo(spec, out):
    e = spec.engine
    n, horizon = _horizon(e)
    run = simulate_minimal_gaussian_demo(output_rate=e["output_rate"], n_tours=n,
                                         horizon_time=horizon, seed=spec.seed,
                                         rate_bound=e["rate_bound"],
                                         record_events=e["record_events"])
    _write_run(out, spec, run, run.states, run.regen_states)
    summary = _run_summary(spec, run, run.states)
    summary["target"] = "std_gaussian"
    r = run.regen_states[:, 0]
    summary["n_regenerations"] = int(r.size)
    summary["regen_second_moment"] = float(np.mean(r * r)) if r.size else None
    summary["regen_max_abs"] = float(np.max(np.abs(r))) if r.size else None
    return summary


def _run_rwm(spec, out):
    base, target, amap = _prepare(spec, out)
    e = spec.engine
    res, scale = pilot_samples(target, spec.seed, e["steps"], e["thin"], e["burn_in_steps"], e["scale"])
    states = res.samples if amap is None else amap.to_original(res.samples)
    steps = np.arange(1, states.shape[0] + 1, dtype=float) * e["thin"]
    io.write_samples_csv(out / "samples.csv", steps, np.zeros(states.shape[0], np.int64), states)
    summary = {
        "command": spec.command,
        "target": spec.target_name,
        "seed": spec.seed,
        "dim": target.dim,
        "n_samples": int(states.shape[0]),
        "n_tours": 0,
        "total_time": float(e["burn_in_steps"] + e["steps"]),
        "z_estimate": None,
        "sigma2_f": None,
        "truncation_exceedance_frac": 0.0,
        "acceptance_rate": float(res.acceptance_rate),
        "scale": float(scale),
    }
    summary.update(_moments(states))
    return summary


def _rate_quantiles(spec, out):
    base, target, amap = _prepare(spec, out)
    e = spec.engine
    res, scale = pilot_samples(target, spec.seed, e["steps"], e["thin"], e["burn_in_steps"], e["scale"])
    mu = build_regeneration(spec.regeneration, target.dim)
    if e["regen_constant"] == "auto":
        c = estimate_regen_constant(res.samples, target, mu) * e["safety_factor"]
    else:
        c = float(e["regen_constant"])
    levels = tuple(e["levels"]) if e["levels"] is not None else DEFAULT_QUANTILE_LEVELS
    partial, partial_mean = rate_quantiles(res.samples, lambda x: partial_rate_value(target, x), levels)
    full, full_mean = rate_quantiles(res.samples, lambda x: full_rate(target, mu, c, x), levels)
    write_quantile_csv(out / "quantiles_partial.csv", partial)
    write_quantile_csv(out / "quantiles_full.csv", full)
    states = res.samples if amap is None else amap.to_original(res.samples)
    io.write_samples_csv(out / "samples.csv",
                         np.arange(1, states.shape[0] + 1, dtype=float) * e["thin"],
                         np.zeros(states.shape[0], np.int64), states)
    return {
        "command": spec.command,
        "target": spec.target_name,
        "seed": spec.seed,
        "dim": target.dim,
        "n_samples": int(res.samples.shape[0]),
        "acceptance_rate": float(res.acceptance_rate),
        "scale": float(scale),
        "regen_constant": c,
        "partial_rate_quantiles": [list(r) for r in partial],
        "full_rate_quantiles": [list(r) for r in full],
        "partial_rate_mean": partial_mean,
        "full_rate_mean": full_mean,
    }


def _guidance(spec, out):
    e = spec.engine
    return {"command": spec.command, "d": e["d"], "eps": e["eps"],
            "truncation_level": gaussian_truncation_level(e["d"], e["eps"])}


_HANDLERS = {
    "run-standard": _run_standard,
    "estimate-z": _run_standard,
    "run-adaptive": _run_adaptive,
    "run-minimal-demo": _run_minimal_demo,
    "run-rwm": _run_rwm,
    "rate-quantiles": _rate_quantiles,
    "guidance": _guidance,
}


def dispatch(spec: RunSpec, write: bool = True) -> dict:
    """Run ``spec``; writes artifacts plus ``summary.json`` into ``spec.output_dir``.

    Returns the summary. ``guidance`` writes nothing unless ``write`` is set
    and an output directory was requested explicitly.
    """
    out = Path(spec.output_dir)
    if spec.command != "guidance":
        out.mkdir(parents=True, exist_ok=True)
    summary = _HANDLERS[spec.command](spec, out)
    summary = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
               for k, v in summary.items()}
    if write and (spec.command != "guidance" or out.exists()):
        io.write_summary_json(out / "summary.json", summary)
    return summary
