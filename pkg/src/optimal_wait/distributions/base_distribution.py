"""Base class for parametric recovery-time distributions."""
import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, ClassVar, Tuple, Union

import numpy as np
from scipy import integrate

from ..errors import DomainError, HazardOverflowError, InfiniteMeanError, InvalidParameterError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class Family(str, Enum):
    """Supported survival families."""
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    LOMAX = "lomax"
    LOGLOGISTIC = "loglogistic"

    @classmethod
    def from_name(cls, name: str) -> 'Family':
        """Parse a family name, ignoring case, dashes and underscores."""
        key = name.strip().lower().replace("-", "").replace("_", "")
        for family in cls:
            if family.value == key:
                return family
        raise InvalidParameterError(
            f"Unknown distribution family '{name}'. Expected one of: "
            f"{', '.join(f.value for f in cls)}."
        )


class RecoveryDistribution(ABC):
    """
    Base class for recovery-time distributions on [0, inf).

    Subclasses are frozen dataclasses whose fields are the positive parameters.
    They implement vectorized kernels as static methods taking the parameters
    positionally, so the same code evaluates a single distribution or one
    distribution per data point (feature regression).
    """

    family: ClassVar[Family]
    param_names: ClassVar[Tuple[str, ...]]

    def __post_init__(self) -> None:
        for name in self.param_names:
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0.0:
                raise InvalidParameterError(
                    f"{self.family.value} parameter '{name}' must be a positive finite number, got {value}."
                )
            object.__setattr__(self, name, value)

    # ---- vectorized kernels -------------------------------------------------

    @staticmethod
    @abstractmethod
    def _log_pdf(x: np.ndarray, *params: Any) -> np.ndarray:
        """Log density."""

    @staticmethod
    @abstractmethod
    def _log_sf(x: np.ndarray, *params: Any) -> np.ndarray:
        """Log survival function."""

    @staticmethod
    @abstractmethod
    def _hazard(x: np.ndarray, *params: Any) -> np.ndarray:
        """Hazard rate in closed form (avoids pdf/survival underflow)."""

    @staticmethod
    @abstractmethod
    def _ppf(u: np.ndarray, *params: Any) -> np.ndarray:
        """Inverse CDF."""

    @staticmethod
    @abstractmethod
    def _score_pdf(x: np.ndarray, *params: Any) -> Tuple[np.ndarray, ...]:
        """Gradient of the log density with respect to each parameter."""

    @staticmethod
    @abstractmethod
    def _score_sf(x: np.ndarray, *params: Any) -> Tuple[np.ndarray, ...]:
        """Gradient of the log survival function with respect to each parameter."""

    @staticmethod
    @abstractmethod
    def initial_guesses(observed: np.ndarray) -> Tuple[Tuple[float, ...], ...]:
        """Three deterministic starting points for numerical fitting."""

    @abstractmethod
    def mean(self) -> float:
        """Expected value; raises InfiniteMeanError when it does not exist."""

    # ---- public operations ----------------------------------------------------

    @property
    def params(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.param_names)

    def log_pdf(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._log_pdf(arr, *self.params)
        return _unwrap(out, scalar)

    def pdf(self, x: ArrayLike) -> ArrayLike:
        """Density f(x)."""
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.exp(self._log_pdf(arr, *self.params))
        return _unwrap(out, scalar)

    def log_survival(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._log_sf(arr, *self.params)
        return _unwrap(out, scalar)

    def survival(self, x: ArrayLike) -> ArrayLike:
        """Probability that recovery takes longer than x."""
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.exp(self._log_sf(arr, *self.params))
        return _unwrap(out, scalar)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = -np.expm1(self._log_sf(arr, *self.params))
        return _unwrap(out, scalar)

    def hazard(self, x: ArrayLike) -> ArrayLike:
        """
        Instantaneous recovery rate pdf(x) / survival(x).

        Raises:
            HazardOverflowError: If the rate is not finite at some x
        """
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(self._hazard(arr, *self.params), dtype=float)
        if not np.all(np.isfinite(out)):
            raise HazardOverflowError(f"Hazard of {self!r} is not finite at the requested points.")
        return _unwrap(out, scalar)

    def saturated_hazard(self, x: ArrayLike) -> ArrayLike:
        """Hazard with overflowed values reported as +inf instead of raising."""
        arr, scalar = _check_time(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(self._hazard(arr, *self.params), dtype=float)
        return _unwrap(out, scalar)

    def quantile(self, u: ArrayLike) -> ArrayLike:
        arr = np.asarray(u, dtype=float)
        if np.any((arr < 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
            raise DomainError("Quantile levels must lie in [0, 1).")
        out = self._ppf(arr, *self.params)
        return float(out) if arr.ndim == 0 else out

    def sample(self, rng: np.random.Generator) -> float:
        """One draw by inversion of the CDF."""
        return float(self.quantile(rng.random()))

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.quantile(rng.random(size)), dtype=float)

    def median(self) -> float:
        return float(self.quantile(0.5))

    def conditional_tail_expectation(self, x: float) -> float:
        """
        E[X | X > x], by quadrature of the conditional survival curve.

        Raises:
            InfiniteMeanError: If the distribution has no first moment
        """
        x = _check_scalar_time(x)
        self.mean()  # raises when the tail expectation diverges
        log_sx = float(self.log_survival(x))

        def conditional_survival(u: float) -> float:
            return math.exp(float(self.log_survival(x + u)) - log_sx)

        tail, _ = integrate.quad(conditional_survival, 0.0, np.inf, limit=200)
        return x + tail

    def integrate_survival(self, a: float, b: float) -> float:
        """
        Integral of the survival function over [a, b] (b may be inf).

        The range is split at decades of the median so heavy tails and
        sharp shoulders near zero are both resolved.
        """
        if b <= a:
            return 0.0
        if math.isinf(b):
            self.mean()
        scale = self.median()
        cuts = [scale * 10.0 ** k for k in range(-8, 13)]
        points = [a] + [c for c in cuts if a < c < b] + [b]
        total = 0.0
        for lo, hi in zip(points[:-1], points[1:]):
            value, _ = integrate.quad(
                lambda t: float(self.survival(t)), lo, hi, limit=200, epsabs=0.0, epsrel=1e-12
            )
            total += value
        return total

    def partial_expectation(self, tau: float) -> float:
        """Integral of t f(t) over [0, tau]; inf when tau is inf and the mean diverges."""
        tau = _check_scalar_time(tau)
        if math.isinf(tau):
            try:
                return self.mean()
            except InfiniteMeanError:
                return math.inf
        return self.integrate_survival(0.0, tau) - tau * float(self.survival(tau))

    def truncated_mean_below(self, tau: float) -> float:
        """E[T | T < tau]; 0 when tau carries no probability mass below it."""
        tau = _check_scalar_time(tau)
        if math.isinf(tau):
            return self.mean()
        mass = float(self.cdf(tau))
        if mass <= 0.0:
            return 0.0
        return self.partial_expectation(tau) / mass

    def score(self, x: ArrayLike, censored: bool = False) -> np.ndarray:
        """Parameter gradient of log pdf (or log survival when censored), shape (n_params, ...)."""
        arr, _ = _check_time(x)
        kernel = self._score_sf if censored else self._score_pdf
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(kernel(arr, *self.params), dtype=float)


def _check_time(x: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise DomainError("Durations must be non-negative numbers.")
    return arr, arr.ndim == 0


def _check_scalar_time(x: float) -> float:
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"Duration must be non-negative, got {x}.")
    return x


def _unwrap(out: np.ndarray, scalar: bool) -> ArrayLike:
    return float(out) if scalar else out
