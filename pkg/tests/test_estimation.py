"""Unit tests for censored maximum-likelihood fitting."""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.optimal_wait.distributions import Exponential, Family, LogLogistic, Lomax, Weibull
from src.optimal_wait.errors import DomainError, InsufficientSampleError
from src.optimal_wait.estimation import (CensoredSampleSet, FitMethod, evaluate_log_likelihood,
                                         fit_censored, fit_generic_censored, fit_lomax_censored,
                                         log_likelihood, log_likelihood_gradient)
from src.optimal_wait.simulation import TransitionRecord

requires_slow = pytest.mark.skipif(
    os.getenv("OPTWAIT_SKIP_SLOW_TESTS", "false").lower() == "true",
    reason="Large-sample recovery tests are disabled"
)


def censored_draws(dist, n, level, seed):
    draws = dist.sample_many(np.random.default_rng(seed), n)
    return CensoredSampleSet.from_durations(draws[draws < level], [level] * int(np.sum(draws >= level)))


def test_log_likelihood_small_cases():
    near_zero = CensoredSampleSet.from_durations([1e-9])
    assert log_likelihood(Lomax(shape=1.0, scale=1.0), near_zero) == pytest.approx(0.0, abs=1e-8)

    samples = CensoredSampleSet.from_durations([1.0, 1.0], [1.0])
    assert log_likelihood(Exponential(rate=1.0), samples) == pytest.approx(-3.0, rel=1e-12)

    samples = CensoredSampleSet.from_durations([2.0], [2.0, 2.0, 2.0])
    expected = math.log(0.125) + 3.0 * math.log(0.25)
    assert log_likelihood(Lomax(shape=2.0, scale=0.5), samples) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-6.2383, abs=1e-4)


def test_log_likelihood_is_additive():
    dist = Weibull(shape=0.7, scale=50.0)
    first = censored_draws(dist, 300, 100.0, seed=1)
    second = censored_draws(dist, 200, 40.0, seed=2)
    joined = first.concat(second)
    assert log_likelihood(dist, joined) == pytest.approx(
        log_likelihood(dist, first) + log_likelihood(dist, second), rel=1e-12)


def test_degenerate_likelihood_is_flagged_not_raised():
    # survival underflows to zero far beyond a steep Weibull scale
    samples = CensoredSampleSet.from_durations([1.0], [1e10])
    result = evaluate_log_likelihood(Weibull(shape=50.0, scale=1.0), samples)
    assert result.value == -math.inf
    assert result.degenerate


def test_sample_set_validation():
    with pytest.raises(DomainError):
        CensoredSampleSet.from_durations([0.0])
    with pytest.raises(DomainError):
        CensoredSampleSet.from_durations([1.0], [math.inf])
    with pytest.raises(DomainError):
        CensoredSampleSet(np.array([1.0]), np.array([5.0]), np.array([0]))


def test_censoring_levels_are_compressed():
    samples = CensoredSampleSet.from_durations([3.0, 3.0], [600.0, 600.0, 20.0])
    np.testing.assert_array_equal(samples.censored_levels, [20.0, 600.0])
    np.testing.assert_array_equal(samples.censored_counts, [1, 2])
    assert (samples.n_observed, samples.n_censored, samples.total) == (2, 3, 5)


def test_samples_from_records():
    records = [
        TransitionRecord("n1", "Unhealthy", "Ready", 4.0, 0),
        TransitionRecord("n1", "Unhealthy", "PoweringOn", 600.0, 10),
        TransitionRecord("n2", "Unhealthy", "Ready", 0.0, 20),
        TransitionRecord("n2", "PoweringOn", "Ready", 9.0, 30),
    ]
    samples = CensoredSampleSet.from_records(records, "Unhealthy", "Ready")
    np.testing.assert_array_equal(samples.observed, [4.0])
    np.testing.assert_array_equal(samples.censored_levels, [600.0])


def test_fit_requires_an_uncensored_observation():
    samples = CensoredSampleSet.from_durations([], [600.0])
    with pytest.raises(InsufficientSampleError):
        fit_lomax_censored(samples)
    with pytest.raises(InsufficientSampleError):
        fit_generic_censored(Family.WEIBULL, samples)


def test_exponential_fit_matches_closed_form():
    samples = censored_draws(Exponential(rate=0.02), 2000, 80.0, seed=3)
    expected = samples.n_observed / (samples.observed.sum()
                                     + np.dot(samples.censored_levels, samples.censored_counts))
    fit = fit_censored("exponential", samples)
    assert fit.distribution.rate == pytest.approx(expected, rel=1e-6)
    assert fit.converged


def test_lomax_bisection_agrees_with_numerical_path():
    samples = censored_draws(Lomax(shape=1.5, scale=0.1), 3000, 600.0, seed=4)
    bisection = fit_lomax_censored(samples)
    numerical = fit_generic_censored(Family.LOMAX, samples)
    assert bisection.method is FitMethod.BISECTION
    assert bisection.converged and not bisection.boundary
    assert bisection.gradient_norm < 1e-6
    np.testing.assert_allclose(numerical.distribution.params, bisection.distribution.params, rtol=1e-3)


def test_uncensored_lomax_fit_agrees_with_numerical_path():
    draws = Lomax(shape=2.5, scale=0.05).sample_many(np.random.default_rng(5), 2000)
    samples = CensoredSampleSet.from_durations(draws)
    bisection = fit_lomax_censored(samples)
    numerical = fit_generic_censored(Family.LOMAX, samples)
    np.testing.assert_allclose(numerical.distribution.params, bisection.distribution.params, rtol=1e-3)
    assert bisection.log_likelihood >= numerical.log_likelihood - 1e-6


@pytest.mark.parametrize("family", [Family.LOMAX, Family.WEIBULL, Family.LOGLOGISTIC])
def test_reported_fit_is_a_local_maximum(family):
    generator = {Family.LOMAX: Lomax(1.1, 0.2), Family.WEIBULL: Weibull(0.8, 300.0),
                 Family.LOGLOGISTIC: LogLogistic(2.0, 30.0)}[family]
    samples = censored_draws(generator, 2000, 600.0, seed=6)
    fit = fit_censored(family, samples)
    best = fit.log_likelihood
    cls = type(fit.distribution)
    for k in range(len(fit.distribution.params)):
        for factor in (0.99, 1.01):
            params = list(fit.distribution.params)
            params[k] *= factor
            assert log_likelihood(cls(*params), samples) <= best + 1e-6


def test_heavier_censoring_lowers_the_fitted_hazard():
    draws = Lomax(shape=1.1, scale=0.2).sample_many(np.random.default_rng(7), 2000)
    observed = draws[draws < 600.0]
    hazards = []
    for m in (0, 10, 100, 1000):
        samples = CensoredSampleSet.from_durations(observed, [600.0] * m)
        hazards.append(float(fit_lomax_censored(samples).distribution.hazard(600.0)))
    assert all(later <= earlier for earlier, later in zip(hazards, hazards[1:]))


def test_single_observation_falls_back_at_the_boundary():
    samples = CensoredSampleSet.from_durations([1.0])
    fit = fit_lomax_censored(samples)
    assert fit.method is FitMethod.NUMERICAL_FALLBACK
    assert fit.boundary
    grid_best = max(
        log_likelihood(Lomax(shape=k, scale=lam), samples)
        for k in np.geomspace(0.1, 10.0, 15)
        for lam in np.geomspace(1e-3, 10.0, 15)
    )
    assert fit.log_likelihood >= grid_best


@requires_slow
def test_lomax_parameters_are_recovered():
    samples = censored_draws(Lomax(shape=1.1, scale=0.2), 100_000, 600.0, seed=8)
    fit = fit_lomax_censored(samples)
    assert fit.distribution.shape == pytest.approx(1.1, rel=0.05)
    assert fit.distribution.scale == pytest.approx(0.2, rel=0.05)


@requires_slow
@pytest.mark.parametrize("truth", [Weibull(shape=0.8, scale=300.0), LogLogistic(shape=2.0, scale=30.0)],
                         ids=["weibull", "loglogistic"])
def test_generic_parameters_are_recovered(truth):
    samples = censored_draws(truth, 100_000, 600.0, seed=9)
    fit = fit_generic_censored(truth.family, samples)
    assert fit.converged
    np.testing.assert_allclose(fit.distribution.params, truth.params, rtol=0.05)


@pytest.mark.parametrize("dist", [Lomax(shape=1.5, scale=0.2), Weibull(shape=0.8, scale=12.0),
                                  LogLogistic(shape=1.7, scale=6.0)])
def test_likelihood_gradient_matches_finite_differences(dist):
    samples = censored_draws(dist, 300, 20.0, seed=8)
    analytic = log_likelihood_gradient(dist, samples)
    h = 1e-6
    numeric = []
    for i, value in enumerate(dist.params):
        up, down = list(dist.params), list(dist.params)
        up[i], down[i] = value * (1 + h), value * (1 - h)
        numeric.append((log_likelihood(type(dist)(*up), samples)
                        - log_likelihood(type(dist)(*down), samples)) / (2.0 * h * value))
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-4)
