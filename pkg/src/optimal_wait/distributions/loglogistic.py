"""Log-logistic recovery distribution."""
import math
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np
from scipy.special import expit, logit, xlogy

from ..errors import InfiniteMeanError
from .base_distribution import Family, RecoveryDistribution


@dataclass(frozen=True)
class LogLogistic(RecoveryDistribution):
    """
    Log-logistic distribution with survival 1 / (1 + (x/scale)^shape).

    For shape > 1 the hazard rises to a mode and then decays to zero, so
    the hazard can cross a level twice. ``scale`` is the median, in seconds.
    """
    shape: float
    scale: float

    family: ClassVar[Family] = Family.LOGLOGISTIC
    param_names: ClassVar[Tuple[str, ...]] = ("shape", "scale")

    @staticmethod
    def _log_pdf(x, shape, scale):
        z = x / scale
        w = shape * np.log(z)
        return np.log(shape / scale) + xlogy(shape - 1.0, z) - 2.0 * np.logaddexp(0.0, w)

    @staticmethod
    def _log_sf(x, shape, scale):
        return -np.logaddexp(0.0, shape * np.log(x / scale))

    @staticmethod
    def _hazard(x, shape, scale):
        z = x / scale
        w = shape * np.log(z)
        return (shape / scale) * np.exp(xlogy(shape - 1.0, z) - np.logaddexp(0.0, w))

    @staticmethod
    def _ppf(u, shape, scale):
        return scale * np.exp(logit(u) / shape)

    @staticmethod
    def _score_pdf(x, shape, scale):
        log_z = np.log(x / scale)
        p = expit(shape * log_z)
        return (1.0 / shape + log_z * (1.0 - 2.0 * p),
                (shape / scale) * (2.0 * p - 1.0))

    @staticmethod
    def _score_sf(x, shape, scale):
        log_z = np.log(x / scale)
        p = expit(shape * log_z)
        return (-p * log_z,
                (shape / scale) * p)

    @staticmethod
    def initial_guesses(observed):
        median = float(np.median(observed))
        return ((1.5, median), (1.0, median), (3.0, median))

    def mean(self) -> float:
        if self.shape <= 1.0:
            raise InfiniteMeanError(f"Log-logistic with shape {self.shape} <= 1 lacks a first moment.")
        ratio = math.pi / self.shape
        return self.scale * ratio / math.sin(ratio)
