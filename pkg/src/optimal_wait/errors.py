"""Exception hierarchy for the optimal-wait toolchain.

Each error also derives from the closest builtin so callers that only catch
``ValueError`` or ``ArithmeticError`` keep working.
"""


class OptimalWaitError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OptimalWaitError, ValueError):
    """An argument lies outside the support of a function (e.g. negative time)."""


class InvalidParameterError(DomainError):
    """Distribution or model parameters violate their positivity/range constraints."""


class InfiniteMeanError(OptimalWaitError, ArithmeticError):
    """The requested moment does not exist (e.g. Lomax with shape <= 1)."""


class HazardOverflowError(OptimalWaitError, OverflowError):
    """The hazard rate could not be represented as a finite number."""


class UnreachableStateError(OptimalWaitError, ValueError):
    """The absorbing state cannot be reached, or a transient state has no outgoing data."""


class UnknownStateError(OptimalWaitError, ValueError):
    """A state name is not part of the model."""


class InsufficientSampleError(OptimalWaitError, ValueError):
    """Too few samples for the requested statistic or fit."""


class ZeroVarianceError(OptimalWaitError, ValueError):
    """Both samples of a t-test have zero variance."""


class IncompleteEpisodeError(OptimalWaitError, ValueError):
    """A node episode does not end in the absorbing state."""


class SchemaError(OptimalWaitError, ValueError):
    """A CSV file is missing required columns."""


class DuplicateKeyError(OptimalWaitError, ValueError):
    """Two model-file rows share the same (cluster, transition) key."""


class ConfigError(OptimalWaitError, ValueError):
    """Configuration is missing, unknown or out of range."""


class UsageError(OptimalWaitError, ValueError):
    """The command line is malformed or names an unknown subcommand."""
