import math

import numpy as np
import pytest
from scipy import stats

from restore_kit.distributions import GaussianReference
from restore_kit.restore import (
    EVENT_KINDS,
    REGEN_ACCEPT,
    RestoreConfig,
    SimulationError,
    _restore_loop,
    coordinate,
    estimate_normalizing_constant,
    ergodic_average,
    sample_minimal_gaussian_regeneration,
    simulate_minimal_gaussian_demo,
    simulate_standard,
    tour_clt_variance,
)
from restore_kit.targets import StdGaussian


def origin(rng):
    return np.zeros(1)


def fig1_config(**kw):
    base = dict(mu=GaussianReference(0.0, 4.0), regen_constant=math.sqrt(2 * math.pi),
                rate_bound=200.0, output_rate=10.0, n_tours=300, seed=3)
    base.update(kw)
    return RestoreConfig(**base)


def test_constant_rate_tours_are_exponential():
    run = _restore_loop(1, lambda x: 0.7, origin, 2.0, 5.0, None, 3000, None, 11, False)
    res = stats.kstest(run.tour_lengths, "expon", args=(0, 1 / 0.7))
    assert res.pvalue > 0.01


def test_output_gaps_are_exponential():
    run = _restore_loop(1, lambda x: 0.0, origin, 1.0, 4.0, None, None, 1000.0, 12, False)
    res = stats.kstest(np.diff(run.times), "expon", args=(0, 0.25))
    assert res.pvalue > 0.01
    assert run.n_tours == 0


def test_brownian_increments_have_time_variance():
    run = _restore_loop(1, lambda x: 0.0, origin, 1.0, 10.0, None, None, 2000.0, 13, False)
    dx = np.diff(run.states[:, 0])
    dt = np.diff(run.times)
    z = dx / np.sqrt(dt)
    assert stats.kstest(z, "norm").pvalue > 0.01


def test_mesh_output_is_evenly_spaced():
    run = _restore_loop(1, lambda x: 0.0, origin, 1.0, None, 0.25, None, 10.0, 1, False)
    np.testing.assert_allclose(run.times, 0.25 * np.arange(1, 41))
    assert run.output_weight == 0.25


def test_tour_lengths_sum_to_total_time():
    run = simulate_standard(fig1_config(), StdGaussian(1))
    assert run.n_tours == 300
    assert run.tour_lengths.sum() == run.total_time
    np.testing.assert_allclose(run.tour_starts[1:], run.tour_starts[:-1] + run.tour_lengths[:-1])
    assert np.all(run.tours[:-1] <= run.tours[1:])


def test_event_log_matches_outputs_and_regenerations():
    run = simulate_standard(fig1_config(), StdGaussian(1))
    names = run.event_names()
    assert names.count("output") == run.n_samples
    assert names.count("regen-accept") == run.n_tours
    assert set(names) <= set(EVENT_KINDS)
    assert np.all(np.diff(run.event_times) >= 0)
    np.testing.assert_array_equal(run.regen_times, run.event_times[run.event_kinds == REGEN_ACCEPT])


def test_same_seed_same_run():
    a = simulate_standard(fig1_config(), StdGaussian(1))
    b = simulate_standard(fig1_config(), StdGaussian(1))
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.event_times, b.event_times)
    c = simulate_standard(fig1_config(seed=4), StdGaussian(1))
    assert not np.array_equal(a.tour_lengths, c.tour_lengths)


def test_recording_events_does_not_change_samples():
    a = simulate_standard(fig1_config(), StdGaussian(1))
    b = simulate_standard(fig1_config(record_events=False), StdGaussian(1))
    np.testing.assert_array_equal(a.states, b.states)
    assert b.event_times.size == 0


def test_nan_rate_raises_with_state():
    with pytest.raises(SimulationError) as info:
        _restore_loop(1, lambda x: math.nan, origin, 1.0, 1.0, None, 5, None, 0, False)
    assert info.value.state is not None and info.value.time > 0


@pytest.mark.parametrize("kw", [
    dict(regen_constant=0.0),
    dict(rate_bound=-1.0),
    dict(output_spacing=0.5),
    dict(output_rate=None),
    dict(n_tours=None),
    dict(horizon_time=10.0),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        simulate_standard(fig1_config(**kw), StdGaussian(1))


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        simulate_standard(fig1_config(mu=GaussianReference(np.zeros(2), 1.0)), StdGaussian(1))


def test_low_bound_warns_about_truncation():
    with pytest.warns(RuntimeWarning, match="exceeded"):
        simulate_standard(fig1_config(rate_bound=0.2, n_tours=20), StdGaussian(1))


def test_normalizing_constant_requires_tours():
    run = _restore_loop(1, lambda x: 0.0, origin, 1.0, 1.0, None, None, 1.0, 0, False)
    with pytest.raises(ValueError, match="no completed tours"):
        estimate_normalizing_constant(run, 1.0)


def test_estimators_on_small_run():
    run = simulate_standard(fig1_config(n_tours=2000), StdGaussian(1))
    z = estimate_normalizing_constant(run, math.sqrt(2 * math.pi))
    assert z == pytest.approx(math.sqrt(2 * math.pi), rel=0.15)
    assert abs(ergodic_average(run, coordinate(0))) < 0.2
    s2 = tour_clt_variance(run, coordinate(0))
    # per-output-time variance must be positive and of order one
    assert 0.1 < s2 < 10


def test_clt_variance_needs_two_tours():
    run = simulate_standard(fig1_config(n_tours=1), StdGaussian(1))
    with pytest.raises(ValueError):
        tour_clt_variance(run, coordinate(0))


def test_minimal_regeneration_law_support_and_moment():
    rng = np.random.default_rng(0)
    draws = np.array([sample_minimal_gaussian_regeneration(rng)[0] for _ in range(20000)])
    assert np.all(np.abs(draws) <= 1.0)
    se = draws.var() ** 0.5 * math.sqrt(2) / math.sqrt(draws.size)  # rough s.e. of x^2 mean
    assert abs((draws ** 2).mean() - 0.178627730715104) < 4 * se


def test_minimal_demo_regenerates_inside_unit_interval():
    run = simulate_minimal_gaussian_demo(output_rate=50, n_tours=200, seed=5)
    assert run.n_tours == 200
    assert np.all(np.abs(run.regen_states) <= 1.0)
    assert run.rate_bound == pytest.approx(0.5 * (stats.chi2.ppf(1 - 1e-4, 1) - 1))
