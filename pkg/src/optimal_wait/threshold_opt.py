"""Expected downtime under a waiting threshold and its optimization."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .config.optwait_config import NumericSettings
from .distributions import RecoveryDistribution
from .errors import DomainError, InfiniteMeanError
from .estimation import CensoredSampleSet
from .markov_cost import READY, TransitionModel, expected_time_to_absorption

logger = logging.getLogger(__name__)


class BoundaryCase(str, Enum):
    INTERIOR = "Interior"
    REBOOT_IMMEDIATELY = "RebootImmediately"
    NEVER_REBOOT = "NeverReboot"


@dataclass(frozen=True)
class ThresholdReport:
    """Optimal waiting threshold and the downtime it saves against a baseline."""
    tau_hat: float
    edt_at_tau_hat: float
    edt_at_zero: float
    edt_limit: float
    edt_at_baseline: float
    tau_baseline: float
    relative_savings: float
    boundary_case: BoundaryCase
    c_int: float

    @property
    def limit_is_infinite(self) -> bool:
        return math.isinf(self.edt_limit)


def _check_cost(c_int: float) -> float:
    c_int = float(c_int)
    if not (c_int > 0.0 and math.isfinite(c_int)):
        raise DomainError(f"Intervention cost must be positive and finite, got {c_int}.")
    return c_int


def _limit_downtime(dist: RecoveryDistribution) -> float:
    """Expected downtime when never intervening: the mean, or inf."""
    try:
        return dist.mean()
    except InfiniteMeanError:
        return math.inf


def expected_downtime(dist: RecoveryDistribution, tau: float, c_int: float) -> float:
    """
    Expected downtime when waiting ``tau`` before intervening at cost ``c_int``.

    E[DT] = integral of t f(t) over [0, tau] + S(tau) (tau + c_int). The Lomax
    partial expectation is in closed form; other families integrate the
    survival curve numerically. tau = 0 returns c_int exactly.
    """
    c_int = _check_cost(c_int)
    tau = float(tau)
    if math.isnan(tau) or tau < 0.0:
        raise DomainError(f"Threshold must be non-negative, got {tau}.")
    if tau == 0.0:
        return c_int
    if math.isinf(tau):
        return _limit_downtime(dist)
    s_tau = float(dist.survival(tau))
    return dist.partial_expectation(tau) + s_tau * (tau + c_int)


def downtime_curve(dist: RecoveryDistribution, c_int: float, tau_grid: Iterable[float]) -> List[Tuple[float, float]]:
    """Expected downtime at each grid threshold, for plotting."""
    return [(float(tau), expected_downtime(dist, tau, c_int)) for tau in tau_grid]


def hazard_crossings(dist: RecoveryDistribution, level: float, settings: Optional[NumericSettings] = None) -> List[float]:
    """
    Every threshold where the hazard equals ``level``.

    Scans a log grid for sign changes of hazard - level and refines each
    bracket by bisection, so two-crossing (log-logistic) cases are caught.
    """
    settings = settings or NumericSettings()
    grid = np.geomspace(settings.root_scan_lower, settings.root_scan_upper, settings.root_scan_points)
    # steep hazards overflow to +inf far out on the grid
    gap = np.asarray(dist.saturated_hazard(grid)) - level
    signs = np.sign(gap)
    if np.all(signs == 0.0):
        # hazard flat at the level: every threshold ties with tau = 0
        return []
    roots = [float(grid[i]) for i in np.flatnonzero(signs == 0.0)]
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0.0):
        root = optimize.bisect(lambda t: float(dist.saturated_hazard(t)) - level, grid[i], grid[i + 1],
                               xtol=np.finfo(float).tiny, rtol=settings.root_rtol, maxiter=400)
        roots.append(float(root))
    return sorted(roots)


def optimal_threshold(dist: RecoveryDistribution, c_int: float, tau_baseline: float = 0.0,
                      settings: Optional[NumericSettings] = None) -> ThresholdReport:
    """
    Threshold minimizing expected downtime.

    Interior stationary points satisfy hazard(tau) = 1 / c_int (waiting is
    worth it while organic recovery is faster than intervening). Candidates
    are every such root plus tau = 0 and tau = inf; the latter is dropped when
    the mean is infinite. Ties go to the smaller threshold.

    Args:
        dist: Organic recovery distribution
        c_int: Intervention cost (expected time to Ready after intervening)
        tau_baseline: Threshold currently in use, for the savings figures
        settings: Root-scan grid and tolerances

    Returns:
        ThresholdReport for the global minimizer
    """
    c_int = _check_cost(c_int)
    candidates = [(c_int, 0.0, BoundaryCase.REBOOT_IMMEDIATELY)]
    for root in hazard_crossings(dist, 1.0 / c_int, settings):
        candidates.append((expected_downtime(dist, root, c_int), root, BoundaryCase.INTERIOR))
    edt_limit = _limit_downtime(dist)
    if math.isfinite(edt_limit):
        candidates.append((edt_limit, math.inf, BoundaryCase.NEVER_REBOOT))
    edt_hat, tau_hat, case = min(candidates, key=lambda c: (c[0], c[1]))

    edt_baseline = expected_downtime(dist, tau_baseline, c_int)
    report = ThresholdReport(
        tau_hat=tau_hat,
        edt_at_tau_hat=edt_hat,
        edt_at_zero=c_int,
        edt_limit=edt_limit,
        edt_at_baseline=edt_baseline,
        tau_baseline=float(tau_baseline),
        relative_savings=_savings(edt_baseline, edt_hat),
        boundary_case=case,
        c_int=c_int,
    )
    logger.info(f"Optimal threshold for {dist!r} at C_int={c_int:g}: tau={tau_hat:.6g} ({case.value})")
    return report


def _savings(edt_baseline: float, edt_hat: float) -> float:
    if math.isinf(edt_baseline):
        return 1.0
    return max(0.0, (edt_baseline - edt_hat) / edt_baseline)


def relative_savings(dist: RecoveryDistribution, c_int: float, tau_baseline: float,
                     settings: Optional[NumericSettings] = None) -> float:
    """Fraction of baseline expected downtime removed by the optimal threshold (clamped at 0)."""
    return optimal_threshold(dist, c_int, tau_baseline, settings).relative_savings


def empirical_transition_model(samples: CensoredSampleSet, tau: float, c_int: float,
                               dist: Optional[RecoveryDistribution] = None) -> TransitionModel:
    """
    Unhealthy/Intervened/Ready model implied by the samples at threshold ``tau``.

    Observations below ``tau`` recover; the rest are intervened at ``tau``.
    Censoring levels at or above ``tau`` are intervened too. Levels below
    ``tau`` are split with the fitted distribution's conditional law, which
    is then required.
    """
    tau = float(tau)
    observed = samples.observed
    weight_ready = float(np.sum(observed < tau))
    time_ready = float(np.sum(observed[observed < tau]))
    weight_reboot = float(np.sum(observed >= tau))
    for level, count in zip(samples.censored_levels, samples.censored_counts):
        if level >= tau:
            weight_reboot += count
            continue
        if dist is None:
            raise DomainError(f"Censoring level {level:g} lies below tau={tau:g}; a fitted distribution is required.")
        s_level = float(dist.survival(level))
        p_more = float(dist.survival(tau)) / s_level
        p_less = 1.0 - p_more
        if p_less > 0.0:
            mass = (dist.partial_expectation(tau) - dist.partial_expectation(level)) / s_level
            time_ready += count * mass
        weight_ready += count * p_less
        weight_reboot += count * p_more
    total = weight_ready + weight_reboot
    mean_ready = time_ready / weight_ready if weight_ready > 0 else 0.0
    probabilities = np.array([
        [0.0, weight_reboot / total, weight_ready / total],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0],
    ])
    times = np.array([
        [0.0, tau, mean_ready],
        [0.0, 0.0, c_int],
        [0.0, 0.0, 0.0],
    ])
    return TransitionModel(("Unhealthy", "Intervened", READY), probabilities, times, 2)


def empirical_expected_downtime(samples: CensoredSampleSet, tau: float, c_int: float,
                                dist: Optional[RecoveryDistribution] = None) -> float:
    """Expected downtime at ``tau`` replayed on the samples themselves (nonparametric cross-check)."""
    c_int = _check_cost(c_int)
    return float(expected_time_to_absorption(empirical_transition_model(samples, tau, c_int, dist))[0])


def optimal_empirical_threshold(samples: CensoredSampleSet, c_int: float, tau_grid: Iterable[float],
                                dist: Optional[RecoveryDistribution] = None) -> Tuple[float, float]:
    """Grid threshold with the smallest empirical expected downtime, as (tau, downtime)."""
    curve = [(empirical_expected_downtime(samples, tau, c_int, dist), float(tau)) for tau in tau_grid]
    downtime, tau = min(curve)
    return tau, downtime
