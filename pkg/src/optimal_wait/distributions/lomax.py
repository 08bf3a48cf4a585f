"""Lomax (Pareto type II) recovery distribution."""
import math
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from ..errors import InfiniteMeanError
from .base_distribution import Family, RecoveryDistribution, _check_scalar_time

# |shape - 1| below this switches to the shape == 1 limit of the closed forms
_UNIT_SHAPE_EPS = 1e-9


@dataclass(frozen=True)
class Lomax(RecoveryDistribution):
    """
    Lomax distribution with density f(x) = lam*k / (1 + lam*x)^(k+1).

    ``scale`` multiplies x, so it is an inverse time (1/seconds).
    Its hazard lam*k / (1 + lam*x) decreases for every parameter choice.
    """
    shape: float
    scale: float

    family: ClassVar[Family] = Family.LOMAX
    param_names: ClassVar[Tuple[str, ...]] = ("shape", "scale")

    @staticmethod
    def _log_pdf(x, shape, scale):
        return np.log(scale) + np.log(shape) - (shape + 1.0) * np.log1p(scale * x)

    @staticmethod
    def _log_sf(x, shape, scale):
        return -shape * np.log1p(scale * x)

    @staticmethod
    def _hazard(x, shape, scale):
        return scale * shape / (1.0 + scale * x)

    @staticmethod
    def _ppf(u, shape, scale):
        return np.expm1(-np.log1p(-u) / shape) / scale

    @staticmethod
    def _score_pdf(x, shape, scale):
        return (1.0 / shape - np.log1p(scale * x),
                1.0 / scale - (shape + 1.0) * x / (1.0 + scale * x))

    @staticmethod
    def _score_sf(x, shape, scale):
        return (-np.log1p(scale * x),
                -shape * x / (1.0 + scale * x))

    @staticmethod
    def initial_guesses(observed):
        median = float(np.median(observed))
        return ((1.0, 1.0 / median), (2.0, 1.0 / median), (0.5, 10.0 / median))

    def mean(self) -> float:
        if self.shape <= 1.0:
            raise InfiniteMeanError(f"Lomax with shape {self.shape} <= 1 lacks a first moment.")
        return 1.0 / (self.scale * (self.shape - 1.0))

    def conditional_tail_expectation(self, x: float) -> float:
        """E[X | X > x] = x*k/(k-1) + 1/(lam*(k-1)), linear in x."""
        x = _check_scalar_time(x)
        mean = self.mean()
        return x * self.shape / (self.shape - 1.0) + mean

    def integrate_survival(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        return self._survival_integral(b) - self._survival_integral(a)

    def _survival_integral(self, t: float) -> float:
        """Antiderivative of the survival function, zero at t = 0."""
        k, lam = self.shape, self.scale
        if math.isinf(t):
            return self.mean()
        log_base = math.log1p(lam * t)
        if abs(k - 1.0) < _UNIT_SHAPE_EPS:
            return log_base / lam
        return -math.expm1((1.0 - k) * log_base) / (lam * (k - 1.0))

    def partial_expectation(self, tau: float) -> float:
        """
        Integral of t f(t) over [0, tau] in closed form.

        Uses E[T|T<tau] P(T<tau) = E[T] - E[T|T>tau] S(tau), which stays
        valid for shape < 1 because the integral is bounded.
        """
        tau = _check_scalar_time(tau)
        k, lam = self.shape, self.scale
        if math.isinf(tau):
            return self.mean() if k > 1.0 else math.inf
        if abs(k - 1.0) < _UNIT_SHAPE_EPS:
            return super().partial_expectation(tau)
        m = 1.0 / (lam * (k - 1.0))
        s_tau = float(self.survival(tau))
        return m - (m + tau * k / (k - 1.0)) * s_tau
