"""Per-point distribution parameters from features via a sigmoid-linked linear map."""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, logit

from .config.optwait_config import NumericSettings
from .distributions import Family, RecoveryDistribution, distribution_class
from .errors import DomainError, InsufficientSampleError, InvalidParameterError
from .estimation import CensoredSampleSet, FitResult, fit_censored
from .threshold_opt import ThresholdReport, optimal_threshold

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Feature values with a leading bias entry fixed at 1."""
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0 or values[0] != 1.0:
            raise DomainError("The first feature must be the bias term 1.")
        if not np.all(np.isfinite(values)):
            raise DomainError("Feature values must be finite.")
        object.__setattr__(self, "values", values)

    @classmethod
    def with_bias(cls, raw: Iterable[float]) -> 'FeatureVector':
        return cls(np.concatenate([[1.0], np.asarray(list(raw), dtype=float)]))

    @property
    def dimension(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class RegressionModel:
    """
    Linear map W (2 x n) from features to the sigmoid argument of (shape, scale).

    Predicted parameters are ``upper_bounds * expit(W f)`` and therefore lie
    strictly inside (0, U1) x (0, U2).
    """
    weights: np.ndarray
    upper_bounds: Tuple[float, float]
    family: Family

    def __post_init__(self) -> None:
        family = self.family if isinstance(self.family, Family) else Family.from_name(str(self.family))
        if len(distribution_class(family).param_names) != 2:
            raise InvalidParameterError(f"Feature regression needs a two-parameter family, not {family.value}.")
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != 2:
            raise DomainError("Weights must be a 2 x n matrix.")
        bounds = tuple(float(u) for u in self.upper_bounds)
        if len(bounds) != 2 or not all(u > 0.0 and math.isfinite(u) for u in bounds):
            raise InvalidParameterError("Upper bounds must be two positive finite numbers.")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "upper_bounds", bounds)

    @property
    def dimension(self) -> int:
        return int(self.weights.shape[1])


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """Observed durations and censoring levels, each paired with a feature row (bias first)."""
    observed_durations: np.ndarray
    observed_features: np.ndarray
    censored_levels: np.ndarray
    censored_features: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.observed_durations, dtype=float).ravel()
        x = np.asarray(self.censored_levels, dtype=float).ravel()
        F_obs = np.asarray(self.observed_features, dtype=float)
        F_cens = np.asarray(self.censored_features, dtype=float)
        dims = {F.shape[1] for F in (F_obs, F_cens) if F.ndim == 2 and F.shape[0] > 0}
        if len(dims) > 1:
            raise DomainError("All feature vectors must share one dimension.")
        n = dims.pop() if dims else 1
        F_obs = F_obs.reshape(t.size, n)
        F_cens = F_cens.reshape(x.size, n)
        for name, values in (("durations", t), ("censoring levels", x)):
            if values.size and not (np.all(np.isfinite(values)) and np.all(values > 0.0)):
                raise DomainError(f"Observed {name} must be positive and finite.")
        for F in (F_obs, F_cens):
            if F.size and (np.any(F[:, 0] != 1.0) or not np.all(np.isfinite(F))):
                raise DomainError("Feature rows must be finite and start with the bias term 1.")
        object.__setattr__(self, "observed_durations", t)
        object.__setattr__(self, "observed_features", F_obs)
        object.__setattr__(self, "censored_levels", x)
        object.__setattr__(self, "censored_features", F_cens)

    @classmethod
    def from_pairs(cls, observed: Sequence[Tuple[float, FeatureVector]],
                   censored: Sequence[Tuple[float, FeatureVector]] = ()) -> 'RegressionDataset':
        def split(pairs):
            durations = [float(d) for d, _ in pairs]
            rows = [f.values for _, f in pairs]
            return np.asarray(durations), (np.vstack(rows) if rows else np.empty((0, 0)))
        t, F_obs = split(list(observed))
        x, F_cens = split(list(censored))
        n = F_obs.shape[1] if F_obs.size else (F_cens.shape[1] if F_cens.size else 1)
        return cls(t, F_obs if F_obs.size else np.empty((0, n)), x, F_cens if F_cens.size else np.empty((0, n)))

    @classmethod
    def from_records(cls, records: Iterable, from_state: str, to_state: str) -> 'RegressionDataset':
        """
        Pair each record leaving ``from_state`` with its features.

        Records reaching ``to_state`` are observations; the rest are censored.

        Raises:
            DomainError: If a relevant record has no features
        """
        observed, censored = [], []
        for record in records:
            if record.from_state != from_state or record.duration <= 0.0:
                continue
            if record.features is None:
                raise DomainError(f"Record for node '{record.node_id}' has no features.")
            pair = (record.duration, FeatureVector.with_bias(record.features))
            (observed if record.to_state == to_state else censored).append(pair)
        return cls.from_pairs(observed, censored)

    @property
    def dimension(self) -> int:
        return int(self.observed_features.shape[1])

    @property
    def total(self) -> int:
        return int(self.observed_durations.size + self.censored_levels.size)

    def featureless(self) -> CensoredSampleSet:
        return CensoredSampleSet.from_durations(self.observed_durations, self.censored_levels)


@dataclass(frozen=True)
class RegressionFit:
    """Fitted regression model with its ascent trace."""
    model: RegressionModel
    log_likelihood_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    global_fit: Optional[FitResult] = None

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihood_trace[-1]


def sigmoid_link(alpha: np.ndarray, upper_bounds: Sequence[float]) -> np.ndarray:
    """theta_k = U_k / (1 + exp(-alpha_k)); accepts alpha of shape (2,) or (2, N)."""
    alpha = np.asarray(alpha, dtype=float)
    bounds = np.asarray(upper_bounds, dtype=float).reshape((2,) + (1,) * (alpha.ndim - 1))
    return bounds * expit(alpha)


def sigmoid_link_derivative(alpha: np.ndarray, upper_bounds: Sequence[float]) -> np.ndarray:
    """d theta / d alpha = sigma(alpha) * (1 - sigma(alpha) / U), componentwise."""
    alpha = np.asarray(alpha, dtype=float)
    bounds = np.asarray(upper_bounds, dtype=float).reshape((2,) + (1,) * (alpha.ndim - 1))
    theta = bounds * expit(alpha)
    return theta * (1.0 - theta / bounds)


def _check_dimension(model: RegressionModel, n: int) -> None:
    if model.dimension != n:
        raise DomainError(f"Model expects {model.dimension} features (with bias), got {n}.")


def predict_params(model: RegressionModel, features: FeatureVector) -> RecoveryDistribution:
    """Distribution for one data point: (shape, scale) = sigma(W f)."""
    _check_dimension(model, features.dimension)
    theta = sigmoid_link(model.weights @ features.values, model.upper_bounds)
    return distribution_class(model.family)(*theta)


def regression_log_likelihood(model: RegressionModel, data: RegressionDataset) -> float:
    """Sum of log pdf over observations and log survival over censored levels at per-point parameters."""
    _check_dimension(model, data.dimension)
    cls = distribution_class(model.family)
    theta_obs = sigmoid_link(model.weights @ data.observed_features.T, model.upper_bounds)
    theta_cens = sigmoid_link(model.weights @ data.censored_features.T, model.upper_bounds)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        value = float(np.sum(cls._log_pdf(data.observed_durations, *theta_obs))
                      + np.sum(cls._log_sf(data.censored_levels, *theta_cens)))
    if not math.isfinite(value):
        logger.warning("Regression log-likelihood is degenerate at the current weights")
        return -math.inf
    return value


def regression_gradient(model: RegressionModel, data: RegressionDataset) -> np.ndarray:
    """
    Analytic gradient of the regression log-likelihood with respect to W.

    Per point: the parameter score, times sigma'(alpha) elementwise, times
    the feature row (outer product), summed over observed and censored points.
    """
    _check_dimension(model, data.dimension)
    cls = distribution_class(model.family)
    grad = np.zeros_like(model.weights)
    for durations, features, kernel in (
        (data.observed_durations, data.observed_features, cls._score_pdf),
        (data.censored_levels, data.censored_features, cls._score_sf),
    ):
        if durations.size == 0:
            continue
        alpha = model.weights @ features.T
        theta = sigmoid_link(alpha, model.upper_bounds)
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.asarray(kernel(durations, *theta), dtype=float)
        grad += (score * sigmoid_link_derivative(alpha, model.upper_bounds)) @ features
    return grad


def _standardize(data: RegressionDataset) -> Tuple[RegressionDataset, np.ndarray, np.ndarray]:
    """Zero-mean, unit-variance non-bias columns; constant columns are only centered."""
    stacked = np.vstack([data.observed_features, data.censored_features])
    mean = stacked[:, 1:].mean(axis=0)
    std = stacked[:, 1:].std(axis=0)
    std = np.where(std > 0.0, std, 1.0)

    def transform(F: np.ndarray) -> np.ndarray:
        Z = F.copy()
        Z[:, 1:] = (F[:, 1:] - mean) / std
        return Z

    scaled = RegressionDataset(data.observed_durations, transform(data.observed_features),
                               data.censored_levels, transform(data.censored_features))
    return scaled, mean, std


def _unstandardize(weights: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    out = weights.copy()
    out[:, 1:] = weights[:, 1:] / std
    out[:, 0] = weights[:, 0] - out[:, 1:] @ mean
    return out


def fit_regression(family, data: RegressionDataset, upper_bounds: Optional[Sequence[float]] = None,
                   settings: Optional[NumericSettings] = None) -> RegressionFit:
    """
    Fit W by gradient ascent on the censored log-likelihood.

    W starts at the featureless fit (bias column logit(theta_global / U),
    zeros elsewhere), so the first iterate reproduces it and every accepted
    step can only raise the likelihood. Steps use Armijo backtracking from
    ``settings.initial_step``; the search runs on standardized features and
    the returned weights act on the raw features.

    Args:
        family: Two-parameter family
        data: Paired observations and censored levels
        upper_bounds: (U1, U2); defaults to ``upper_bound_factor`` times the featureless fit
        settings: Step, tolerance and iteration settings

    Returns:
        RegressionFit with the log-likelihood trace (best-so-far if not converged)
    """
    settings = settings or NumericSettings()
    family = family if isinstance(family, Family) else Family.from_name(str(family))
    if data.observed_durations.size == 0:
        raise InsufficientSampleError("At least one uncensored observation is required for a fit.")

    global_fit = fit_censored(family, data.featureless(), settings)
    theta_global = np.asarray(global_fit.distribution.params)
    if len(theta_global) != 2:
        raise InvalidParameterError(f"Feature regression needs a two-parameter family, not {family.value}.")
    bounds = (np.asarray(upper_bounds, dtype=float) if upper_bounds is not None
              else settings.upper_bound_factor * theta_global)
    if np.any(theta_global >= bounds):
        raise InvalidParameterError(f"Upper bounds {tuple(bounds)} do not contain the featureless fit {tuple(theta_global)}.")

    scaled, mean, std = _standardize(data)
    weights = np.zeros((2, data.dimension))
    weights[:, 0] = logit(theta_global / bounds)
    model = RegressionModel(weights, tuple(bounds), family)
    total = float(data.total)

    ll = regression_log_likelihood(model, scaled)
    trace = [ll]
    converged = False
    iteration = 0
    for iteration in range(1, settings.regression_max_iter + 1):
        grad = regression_gradient(model, scaled) / total
        if np.max(np.abs(grad)) < settings.regression_grad_tol:
            converged = True
            break
        step = settings.initial_step
        squared = float(np.sum(grad * grad))
        while True:
            candidate = RegressionModel(model.weights + step * grad, model.upper_bounds, family)
            candidate_ll = regression_log_likelihood(candidate, scaled)
            if candidate_ll >= ll + settings.armijo_c1 * step * squared * total:
                break
            step *= settings.armijo_shrink
            if step < 1e-16:
                candidate = None
                break
        if candidate is None:
            logger.warning(f"Line search stalled at iteration {iteration}")
            break
        model, ll = candidate, candidate_ll
        trace.append(ll)
    if not converged:
        logger.warning(f"Regression ascent stopped after {iteration} iterations without reaching tolerance")

    fitted = RegressionModel(_unstandardize(model.weights, mean, std), model.upper_bounds, family)
    logger.info(f"Regression fit: log-likelihood {trace[0]:.6g} -> {trace[-1]:.6g} in {iteration} iterations")
    return RegressionFit(fitted, trace, iteration, converged, global_fit)


def per_point_threshold(model: RegressionModel, features: FeatureVector, c_int: float,
                        tau_baseline: float = 0.0, settings: Optional[NumericSettings] = None) -> ThresholdReport:
    """Optimal threshold for the distribution predicted at ``features``."""
    return optimal_threshold(predict_params(model, features), c_int, tau_baseline, settings)
