"""Exponential recovery distribution (constant hazard)."""
import math
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from .base_distribution import Family, RecoveryDistribution, _check_scalar_time


@dataclass(frozen=True)
class Exponential(RecoveryDistribution):
    """Exponential distribution with ``rate`` in 1/seconds."""
    rate: float

    family: ClassVar[Family] = Family.EXPONENTIAL
    param_names: ClassVar[Tuple[str, ...]] = ("rate",)

    @staticmethod
    def _log_pdf(x, rate):
        return np.log(rate) - rate * x

    @staticmethod
    def _log_sf(x, rate):
        return -rate * x

    @staticmethod
    def _hazard(x, rate):
        return np.full_like(np.asarray(x, dtype=float), rate)

    @staticmethod
    def _ppf(u, rate):
        return -np.log1p(-u) / rate

    @staticmethod
    def _score_pdf(x, rate):
        return (1.0 / rate - x,)

    @staticmethod
    def _score_sf(x, rate):
        return (-x,)

    @staticmethod
    def initial_guesses(observed):
        mean = float(np.mean(observed))
        return ((1.0 / mean,), (0.5 / mean,), (2.0 / mean,))

    def mean(self) -> float:
        return 1.0 / self.rate

    def conditional_tail_expectation(self, x: float) -> float:
        return _check_scalar_time(x) + 1.0 / self.rate

    def integrate_survival(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        upper = 0.0 if math.isinf(b) else math.exp(-self.rate * b)
        return (math.exp(-self.rate * a) - upper) / self.rate
