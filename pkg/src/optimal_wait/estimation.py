"""Maximum-likelihood fitting from fully observed and right-censored durations."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .config.optwait_config import NumericSettings
from .distributions import Family, Lomax, RecoveryDistribution, distribution_class
from .errors import DomainError, InsufficientSampleError

logger = logging.getLogger(__name__)

# log-parameter box for the numerical search
_LOG_PARAM_BOUND = 30.0


@dataclass(frozen=True, eq=False)
class CensoredSampleSet:
    """
    Recovery durations: exact observations plus right-censoring levels.

    A censored level x with count m records m episodes known only to have
    lasted longer than x (the intervention fired at x).
    """
    observed: np.ndarray
    censored_levels: np.ndarray
    censored_counts: np.ndarray

    def __post_init__(self) -> None:
        observed = np.asarray(self.observed, dtype=float).ravel()
        levels = np.asarray(self.censored_levels, dtype=float).ravel()
        counts = np.asarray(self.censored_counts, dtype=np.int64).ravel()
        if levels.shape != counts.shape:
            raise DomainError("Censored levels and counts must have equal length.")
        if observed.size and not (np.all(np.isfinite(observed)) and np.all(observed > 0.0)):
            raise DomainError("Observed durations must be positive and finite.")
        if levels.size and not (np.all(np.isfinite(levels)) and np.all(levels > 0.0)):
            raise DomainError("Censoring levels must be positive and finite.")
        if counts.size and np.any(counts < 1):
            raise DomainError("Censoring counts must be at least 1.")
        object.__setattr__(self, "observed", observed)
        object.__setattr__(self, "censored_levels", levels)
        object.__setattr__(self, "censored_counts", counts)

    @classmethod
    def from_durations(cls, observed: Iterable[float], censored: Iterable[float] = ()) -> 'CensoredSampleSet':
        """Build a sample set, compressing repeated censoring levels into counts."""
        censored = np.asarray(list(censored), dtype=float)
        levels, counts = np.unique(censored, return_counts=True)
        return cls(np.asarray(list(observed), dtype=float), levels, counts)

    @classmethod
    def from_records(cls, records: Iterable, from_state: str, to_state: str) -> 'CensoredSampleSet':
        """
        Collect the samples of one transition from a transition log.

        Records ``from_state -> to_state`` are exact observations; records
        leaving ``from_state`` for any other state are censored at their
        duration. Zero durations carry no information and are skipped.
        """
        observed, censored = [], []
        skipped = 0
        for record in records:
            if record.from_state != from_state:
                continue
            if record.duration <= 0.0:
                skipped += 1
                continue
            if record.to_state == to_state:
                observed.append(record.duration)
            else:
                censored.append(record.duration)
        if skipped:
            logger.info(f"Skipped {skipped} zero-duration records leaving '{from_state}'")
        return cls.from_durations(observed, censored)

    @property
    def n_observed(self) -> int:
        return int(self.observed.size)

    @property
    def n_censored(self) -> int:
        return int(self.censored_counts.sum())

    @property
    def total(self) -> int:
        return self.n_observed + self.n_censored

    def concat(self, other: 'CensoredSampleSet') -> 'CensoredSampleSet':
        return CensoredSampleSet(
            np.concatenate([self.observed, other.observed]),
            np.concatenate([self.censored_levels, other.censored_levels]),
            np.concatenate([self.censored_counts, other.censored_counts]),
        )


class FitMethod(str, Enum):
    """Path taken by a fit."""
    BISECTION = "bisection"
    NUMERICAL = "numerical"
    NUMERICAL_FALLBACK = "numerical_fallback"


@dataclass(frozen=True)
class FitResult:
    """Fitted distribution plus diagnostics."""
    distribution: RecoveryDistribution
    log_likelihood: float
    method: FitMethod
    converged: bool
    boundary: bool
    gradient_norm: float


@dataclass(frozen=True)
class LikelihoodEvaluation:
    value: float
    degenerate: bool


def evaluate_log_likelihood(dist: RecoveryDistribution, samples: CensoredSampleSet) -> LikelihoodEvaluation:
    """
    Censored log-likelihood with a degeneracy flag.

    A zero density at an observation or zero survival at a censoring level
    yields the -inf sentinel with ``degenerate`` set, never an exception.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_pdf = dist._log_pdf(samples.observed, *dist.params)
        log_sf = dist._log_sf(samples.censored_levels, *dist.params)
        value = float(np.sum(log_pdf) + np.dot(samples.censored_counts, log_sf))
    if math.isnan(value) or value == math.inf or value == -math.inf:
        logger.warning(f"Log-likelihood of {dist!r} is degenerate on the given samples")
        return LikelihoodEvaluation(-math.inf, True)
    return LikelihoodEvaluation(value, False)


def log_likelihood(dist: RecoveryDistribution, samples: CensoredSampleSet) -> float:
    """Sum of log pdf over observations plus count-weighted log survival over levels."""
    return evaluate_log_likelihood(dist, samples).value


def log_likelihood_gradient(dist: RecoveryDistribution, samples: CensoredSampleSet) -> np.ndarray:
    """Gradient of the censored log-likelihood with respect to the distribution parameters."""
    with np.errstate(divide="ignore", invalid="ignore"):
        score_obs = np.asarray(dist._score_pdf(samples.observed, *dist.params), dtype=float)
        score_cens = np.asarray(dist._score_sf(samples.censored_levels, *dist.params), dtype=float)
    return score_obs.sum(axis=1) + score_cens @ samples.censored_counts


def _relative_gradient_norm(dist: RecoveryDistribution, samples: CensoredSampleSet) -> float:
    """Max-norm of the per-sample gradient in log-parameter coordinates."""
    grad = log_likelihood_gradient(dist, samples) * np.asarray(dist.params)
    return float(np.max(np.abs(grad)) / max(samples.total, 1))


def _require_observed(samples: CensoredSampleSet) -> None:
    if samples.n_observed == 0:
        raise InsufficientSampleError("At least one uncensored observation is required for a fit.")


def fit_lomax_censored(samples: CensoredSampleSet, settings: Optional[NumericSettings] = None) -> FitResult:
    """
    Fit a Lomax distribution to censored samples.

    The shape condition dl/dk = 0 gives k(lam) = n / (sum log(1+lam t_i) +
    sum m_j log(1+lam x_j)). Substituting it into lam * dl/dlam = 0 leaves a
    condition in lam alone, solved by bisection; k follows from k(lam).
    Without a sign change in the bracket the generic numerical fit is used.

    Args:
        samples: Observed and censored durations
        settings: Bracket, tolerances and iteration caps

    Returns:
        FitResult whose ``method`` tells which path produced it

    Raises:
        InsufficientSampleError: If there are no uncensored observations
    """
    settings = settings or NumericSettings()
    _require_observed(samples)
    t = samples.observed
    x = samples.censored_levels
    m = samples.censored_counts.astype(float)
    n = float(t.size)

    def shape_of(lam: float) -> float:
        return n / (np.sum(np.log1p(lam * t)) + np.dot(m, np.log1p(lam * x)))

    def scale_condition(lam: float) -> float:
        k = shape_of(lam)
        observed_term = np.sum(lam * t / (1.0 + lam * t))
        censored_term = np.dot(m, lam * x / (1.0 + lam * x))
        return (n - (k + 1.0) * observed_term - k * censored_term) / n

    lo, hi = settings.bisection_lower, settings.bisection_upper
    f_lo, f_hi = scale_condition(lo), scale_condition(hi)
    if not (f_lo > 0.0 > f_hi):
        logger.warning(
            f"No sign change of the Lomax scale condition on [{lo:g}, {hi:g}] "
            f"(values {f_lo:.3g}, {f_hi:.3g}); falling back to numerical MLE"
        )
        fallback = fit_generic_censored(Family.LOMAX, samples, settings)
        boundary = fallback.boundary or f_lo <= 0.0
        if boundary:
            logger.warning("Lomax fit sits on the exponential boundary of the parameter space")
        return FitResult(fallback.distribution, fallback.log_likelihood, FitMethod.NUMERICAL_FALLBACK,
                         fallback.converged, boundary, fallback.gradient_norm)

    lam, info = optimize.bisect(
        scale_condition, lo, hi,
        xtol=np.finfo(float).tiny, rtol=settings.bisection_rtol,
        maxiter=settings.bisection_max_iter, full_output=True, disp=False,
    )
    dist = Lomax(shape=shape_of(lam), scale=lam)
    grad_norm = _relative_gradient_norm(dist, samples)
    stationary = grad_norm < settings.stationarity_tol
    if not stationary:
        logger.warning(f"Bisection fit {dist!r} has gradient norm {grad_norm:.3g}; polishing numerically")
        polished = fit_generic_censored(Family.LOMAX, samples, settings, starts=(dist.params,))
        if polished.log_likelihood > log_likelihood(dist, samples):
            return FitResult(polished.distribution, polished.log_likelihood, FitMethod.NUMERICAL_FALLBACK,
                             polished.converged, polished.boundary, polished.gradient_norm)
    logger.info(f"Censored Lomax fit: shape={dist.shape:.6g}, scale={dist.scale:.6g} "
                f"({info.iterations} bisection steps)")
    return FitResult(dist, log_likelihood(dist, samples), FitMethod.BISECTION,
                     bool(info.converged) and stationary, False, grad_norm)


def fit_generic_censored(family, samples: CensoredSampleSet, settings: Optional[NumericSettings] = None,
                         starts: Optional[Sequence[Tuple[float, ...]]] = None) -> FitResult:
    """
    Numerically maximize the censored log-likelihood for any family.

    The search runs L-BFGS-B on log-parameters with the analytic score,
    from three deterministic starting points, and keeps the best optimum.

    Args:
        family: Distribution family (Family or name)
        samples: Observed and censored durations
        settings: Iteration caps
        starts: Optional starting parameter tuples overriding the defaults

    Returns:
        FitResult with a convergence flag (best-so-far when not converged)
    """
    settings = settings or NumericSettings()
    _require_observed(samples)
    family = family if isinstance(family, Family) else Family.from_name(str(family))
    cls = distribution_class(family)
    t = samples.observed
    x = samples.censored_levels
    m = samples.censored_counts.astype(float)
    total = float(samples.total)

    def objective(log_theta: np.ndarray) -> Tuple[float, np.ndarray]:
        theta = np.exp(log_theta)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            value = -(np.sum(cls._log_pdf(t, *theta)) + np.dot(m, cls._log_sf(x, *theta))) / total
            grad = -(np.asarray(cls._score_pdf(t, *theta)).sum(axis=1)
                     + np.asarray(cls._score_sf(x, *theta)) @ m) * theta / total
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            return 1e100, np.zeros_like(log_theta)
        return float(value), grad

    starts = starts or cls.initial_guesses(t)
    bounds = [(-_LOG_PARAM_BOUND, _LOG_PARAM_BOUND)] * len(cls.param_names)
    best = None
    for start in starts:
        res = optimize.minimize(
            objective, np.log(np.asarray(start, dtype=float)), jac=True, method="L-BFGS-B",
            bounds=bounds, options={"maxiter": settings.mle_max_iter, "ftol": 1e-15, "gtol": 1e-10},
        )
        logger.debug(f"{family.value} start {start}: objective={res.fun:.10g}, success={res.success}")
        if best is None or res.fun < best.fun:
            best = res

    dist = cls(*np.exp(best.x))
    grad_norm = float(np.max(np.abs(best.jac)))
    converged = bool(best.success) or grad_norm < settings.stationarity_tol
    boundary = bool(np.any(np.abs(best.x) > _LOG_PARAM_BOUND - 1e-6))
    if not converged:
        logger.warning(f"{family.value} fit did not converge: {best.message}")
    if boundary:
        logger.warning(f"{family.value} fit reached the parameter box: {dist!r}")
    return FitResult(dist, -best.fun * total, FitMethod.NUMERICAL, converged, boundary, grad_norm)


def fit_censored(family, samples: CensoredSampleSet, settings: Optional[NumericSettings] = None) -> FitResult:
    """Fit any family: Lomax through the bisection path, the others numerically."""
    family = family if isinstance(family, Family) else Family.from_name(str(family))
    if family is Family.LOMAX:
        return fit_lomax_censored(samples, settings)
    return fit_generic_censored(family, samples, settings)
