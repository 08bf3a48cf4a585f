"""Parametric recovery-time distributions."""
from typing import Dict, Optional, Type

from ..errors import InvalidParameterError
from .base_distribution import Family, RecoveryDistribution
from .exponential import Exponential
from .lomax import Lomax
from .loglogistic import LogLogistic
from .weibull import Weibull

DISTRIBUTION_CLASSES: Dict[Family, Type[RecoveryDistribution]] = {
    Family.EXPONENTIAL: Exponential,
    Family.WEIBULL: Weibull,
    Family.LOMAX: Lomax,
    Family.LOGLOGISTIC: LogLogistic,
}


def distribution_class(family: Family) -> Type[RecoveryDistribution]:
    return DISTRIBUTION_CLASSES[Family(family)]


def make_distribution(family, shape: Optional[float] = None, scale: Optional[float] = None) -> RecoveryDistribution:
    """
    Build a distribution from a family name and its (shape, scale) slots.

    The exponential rate travels in the ``scale`` slot, matching the role of
    the Lomax inverse scale.

    Raises:
        InvalidParameterError: If a required slot is missing or a value is invalid
    """
    family = family if isinstance(family, Family) else Family.from_name(str(family))
    if scale is None:
        raise InvalidParameterError(f"{family.value} requires a scale parameter.")
    if family is Family.EXPONENTIAL:
        return Exponential(rate=scale)
    if shape is None:
        raise InvalidParameterError(f"{family.value} requires a shape parameter.")
    return DISTRIBUTION_CLASSES[family](shape=shape, scale=scale)


__all__ = [
    'DISTRIBUTION_CLASSES',
    'Exponential',
    'Family',
    'LogLogistic',
    'Lomax',
    'RecoveryDistribution',
    'Weibull',
    'distribution_class',
    'make_distribution',
]
