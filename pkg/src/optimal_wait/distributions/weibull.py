"""Weibull recovery distribution."""
import math
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np
from scipy.special import xlogy

from .base_distribution import Family, RecoveryDistribution


@dataclass(frozen=True)
class Weibull(RecoveryDistribution):
    """
    Weibull distribution with survival exp(-(x/scale)^shape).

    The hazard decreases for shape < 1, is constant at shape == 1 and
    increases for shape > 1. ``scale`` is a time in seconds.
    """
    shape: float
    scale: float

    family: ClassVar[Family] = Family.WEIBULL
    param_names: ClassVar[Tuple[str, ...]] = ("shape", "scale")

    @staticmethod
    def _log_pdf(x, shape, scale):
        z = x / scale
        return np.log(shape / scale) + xlogy(shape - 1.0, z) - z ** shape

    @staticmethod
    def _log_sf(x, shape, scale):
        return -(x / scale) ** shape

    @staticmethod
    def _hazard(x, shape, scale):
        return (shape / scale) * np.exp(xlogy(shape - 1.0, x / scale))

    @staticmethod
    def _ppf(u, shape, scale):
        return scale * (-np.log1p(-u)) ** (1.0 / shape)

    @staticmethod
    def _score_pdf(x, shape, scale):
        z = x / scale
        zk = z ** shape
        return (1.0 / shape + np.log(z) * (1.0 - zk),
                (shape / scale) * (zk - 1.0))

    @staticmethod
    def _score_sf(x, shape, scale):
        z = x / scale
        zk = z ** shape
        return (-xlogy(zk, z),
                (shape / scale) * zk)

    @staticmethod
    def initial_guesses(observed):
        median = float(np.median(observed))
        mean = float(np.mean(observed))
        return ((1.0, mean), (0.5, median), (2.0, median))

    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)
