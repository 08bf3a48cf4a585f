"""Unit tests for expected downtime and the optimal waiting threshold."""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.optimal_wait.distributions import Exponential, LogLogistic, Lomax, RecoveryDistribution, Weibull
from src.optimal_wait.errors import DomainError
from src.optimal_wait.estimation import CensoredSampleSet
from src.optimal_wait.simulation import monte_carlo_downtime
from src.optimal_wait.threshold_opt import (BoundaryCase, downtime_curve, empirical_expected_downtime,
                                            expected_downtime, hazard_crossings, optimal_empirical_threshold,
                                            optimal_threshold, relative_savings)

SHAPES = [0.6, 0.9, 1.1, 2.0, 5.0]
SCALES = [0.01, 0.05, 0.2, 0.5, 1.0]
COSTS = [10.0, 100.0, 600.0]


def lomax_downtime_grid(shape, scale, c_int, taus):
    """EDT(tau) = integral of S over [0, tau] + S(tau) c_int, in closed form."""
    base = 1.0 + scale * taus
    survival_integral = (1.0 - base ** (1.0 - shape)) / (scale * (shape - 1.0))
    return survival_integral + base ** (-shape) * c_int


@pytest.fixture
def lomax():
    return Lomax(shape=2.0, scale=0.5)


def test_zero_threshold_costs_exactly_the_intervention(lomax):
    assert expected_downtime(lomax, 0.0, 10.0) == 10.0
    assert expected_downtime(Weibull(0.7, 50.0), 0.0, 600.0) == 600.0
    assert downtime_curve(lomax, 10.0, [0.0]) == [(0.0, 10.0)]


def test_expected_downtime_lomax_values(lomax):
    assert expected_downtime(lomax, math.inf, 10.0) == pytest.approx(2.0)
    assert expected_downtime(lomax, 18.0, 10.0) == pytest.approx(1.90, rel=1e-12)
    assert expected_downtime(lomax, 10.0, 10.0) == pytest.approx(1.94444444, rel=1e-8)


def test_infinite_threshold_with_heavy_tail_is_infinite():
    assert expected_downtime(Lomax(shape=0.6, scale=1.0), math.inf, 10.0) == math.inf


@pytest.mark.parametrize("tau, c_int", [(-1.0, 10.0), (5.0, 0.0), (5.0, -3.0), (math.nan, 10.0)])
def test_invalid_threshold_or_cost(lomax, tau, c_int):
    with pytest.raises(DomainError):
        expected_downtime(lomax, tau, c_int)


def test_optimal_threshold_interior(lomax):
    report = optimal_threshold(lomax, 10.0)
    assert report.boundary_case is BoundaryCase.INTERIOR
    assert report.tau_hat == pytest.approx(18.0, rel=1e-8)
    assert report.edt_at_tau_hat == pytest.approx(1.90, rel=1e-8)
    assert report.edt_at_zero == 10.0
    assert report.edt_limit == pytest.approx(2.0)
    assert float(lomax.hazard(report.tau_hat)) == pytest.approx(0.1, rel=1e-8)


def test_derivative_vanishes_at_interior_optimum(lomax):
    tau = optimal_threshold(lomax, 10.0).tau_hat
    h = 1e-4 * tau
    slope = (expected_downtime(lomax, tau + h, 10.0) - expected_downtime(lomax, tau - h, 10.0)) / (2.0 * h)
    assert abs(slope) < 1e-6 * 10.0


def test_hazard_never_reaching_level_reboots_immediately():
    report = optimal_threshold(Lomax(shape=1.0, scale=1.0), 0.5)
    assert report.boundary_case is BoundaryCase.REBOOT_IMMEDIATELY
    assert report.tau_hat == 0.0
    assert report.limit_is_infinite


@pytest.mark.parametrize("rate, case, tau, edt", [
    (1.0, BoundaryCase.NEVER_REBOOT, math.inf, 1.0),
    (0.5, BoundaryCase.NEVER_REBOOT, math.inf, 2.0),
    (0.05, BoundaryCase.REBOOT_IMMEDIATELY, 0.0, 10.0),
])
def test_exponential_boundary_cases(rate, case, tau, edt):
    report = optimal_threshold(Exponential(rate=rate), 10.0)
    assert report.boundary_case is case
    assert report.tau_hat == tau
    assert report.edt_at_tau_hat == pytest.approx(edt)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("scale", SCALES)
@pytest.mark.parametrize("c_int", COSTS)
def test_optimum_beats_a_dense_grid(shape, scale, c_int):
    dist = Lomax(shape=shape, scale=scale)
    taus = np.concatenate([[0.0], np.geomspace(1e-3, 1e7, 100_000 - 1)])
    brute = lomax_downtime_grid(shape, scale, c_int, taus)
    report = optimal_threshold(dist, c_int, tau_baseline=600.0)
    assert report.edt_at_tau_hat <= brute.min() + 1e-9
    # decreasing hazard: the optimum is 0 or a finite crossing, both inside the grid
    assert brute.min() <= report.edt_at_tau_hat * (1.0 + 1e-6)
    assert report.edt_at_tau_hat <= min(report.edt_at_zero, report.edt_at_baseline) + 1e-9
    if report.boundary_case is BoundaryCase.INTERIOR:
        assert float(dist.hazard(report.tau_hat)) == pytest.approx(1.0 / c_int, rel=1e-8)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("scale", SCALES)
def test_lomax_closed_form_matches_quadrature(shape, scale):
    dist = Lomax(shape=shape, scale=scale)
    for tau in (0.5, 18.0, 600.0):
        quadrature = RecoveryDistribution.integrate_survival(dist, 0.0, tau)
        assert dist.integrate_survival(0.0, tau) == pytest.approx(quadrature, rel=1e-8)


def test_loglogistic_hazard_crosses_twice():
    dist = LogLogistic(shape=3.0, scale=10.0)
    roots = hazard_crossings(dist, 0.1)
    assert len(roots) == 2
    np.testing.assert_allclose(dist.hazard(np.array(roots)), 0.1, rtol=1e-8)

    # downtime rises, peaks at the first crossing, then falls to a minimum at the second
    taus = np.linspace(0.5, 60.0, 400)
    values = np.array([v for _, v in downtime_curve(dist, 10.0, taus)])
    slope_signs = np.sign(np.diff(values))
    changes = np.flatnonzero(slope_signs[:-1] != slope_signs[1:])
    assert len(changes) == 2
    assert taus[changes[0]] == pytest.approx(roots[0], abs=0.5)
    assert taus[changes[1]] == pytest.approx(roots[1], abs=0.5)

    report = optimal_threshold(dist, 10.0)
    assert report.tau_hat in (0.0, roots[1], math.inf)
    assert report.edt_at_tau_hat <= min(10.0, expected_downtime(dist, roots[1], 10.0), dist.mean())


def test_flat_hazard_at_level_has_no_crossings():
    assert hazard_crossings(Exponential(rate=0.1), 0.1) == []


def test_relative_savings(lomax):
    assert relative_savings(lomax, 10.0, 10.0) == pytest.approx((1.94444444 - 1.9) / 1.94444444, rel=1e-6)
    assert relative_savings(lomax, 10.0, 10.0) == pytest.approx(0.023, abs=5e-4)
    assert relative_savings(lomax, 10.0, 0.0) == pytest.approx((10.0 - 1.9) / 10.0)
    tau_hat = optimal_threshold(lomax, 10.0).tau_hat
    assert relative_savings(lomax, 10.0, tau_hat) == pytest.approx(0.0, abs=1e-12)


def test_savings_against_infinite_baseline_are_total():
    report = optimal_threshold(Lomax(shape=0.6, scale=1.0), 10.0, tau_baseline=math.inf)
    assert report.edt_at_baseline == math.inf
    assert report.relative_savings == 1.0


def test_monte_carlo_agrees_with_expected_downtime(lomax):
    rng = np.random.default_rng(2024)
    for tau in (2.0, 18.0, 60.0):
        mean, se = monte_carlo_downtime(lomax, tau, 10.0, 1_000_000, rng)
        assert abs(mean - expected_downtime(lomax, tau, 10.0)) < 4.0 * se


def test_empirical_downtime_on_a_small_sample():
    samples = CensoredSampleSet.from_durations([1.0, 2.0, 3.0, 10.0])
    assert empirical_expected_downtime(samples, 5.0, 10.0) == pytest.approx(5.25)
    assert optimal_empirical_threshold(samples, 10.0, [0.0, 5.0, 20.0]) == (20.0, pytest.approx(4.0))


def test_empirical_downtime_needs_a_fit_below_low_censoring():
    samples = CensoredSampleSet.from_durations([1.0, 2.0], [3.0])
    with pytest.raises(DomainError):
        empirical_expected_downtime(samples, 5.0, 10.0)
    lomax = Lomax(shape=2.0, scale=0.5)
    value = empirical_expected_downtime(samples, 5.0, 10.0, dist=lomax)
    assert 0.0 < value < 15.0


def test_steep_weibull_hazard_does_not_overflow_the_scan():
    dist = Weibull(shape=50.0, scale=1.0)
    roots = hazard_crossings(dist, 0.1)
    assert len(roots) == 1
    assert float(dist.hazard(roots[0])) == pytest.approx(0.1, rel=1e-8)

    # increasing hazard: the crossing is a maximum, waiting it out wins
    report = optimal_threshold(dist, 10.0)
    assert report.boundary_case is BoundaryCase.NEVER_REBOOT
    assert report.tau_hat == math.inf
    assert report.edt_at_tau_hat == pytest.approx(dist.mean(), rel=1e-12)
