"""
Configuration module for the optimal-wait toolchain.
Handles numeric settings and loading runtime options from environment variables.
"""
import os
import logging
from dataclasses import dataclass, field
from typing import Optional

from dotenv import load_dotenv

from ..errors import ConfigError

logger = logging.getLogger(__name__)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class NumericSettings:
    """Tolerances, brackets and iteration caps shared by the numerical routines."""
    # censored Lomax fit (lambda bisection)
    bisection_lower: float = 1e-9
    bisection_upper: float = 1e6
    bisection_max_iter: int = 200
    bisection_rtol: float = 1e-10
    stationarity_tol: float = 1e-6
    # generic maximum likelihood
    mle_max_iter: int = 2000
    # hazard root scan for optimal_threshold
    root_scan_lower: float = 1e-6
    root_scan_upper: float = 1e8
    root_scan_points: int = 2000
    root_rtol: float = 1e-12
    # absorbing chain solve
    max_condition_number: float = 1e12
    # feature regression
    regression_grad_tol: float = 1e-6
    regression_max_iter: int = 10_000
    armijo_shrink: float = 0.5
    armijo_c1: float = 1e-4
    initial_step: float = 1.0
    upper_bound_factor: float = 10.0
    # joint threshold descent
    joint_relative_step: float = 1e-5
    joint_grad_tol: float = 1e-6
    joint_max_iter: int = 5000


@dataclass
class OptimalWaitConfig:
    """Runtime configuration for the command-line toolchain."""
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    assignment_prob: float = 0.35
    baseline_tau: float = 600.0
    numerics: NumericSettings = field(default_factory=NumericSettings)

    @classmethod
    def load_from_env(cls) -> 'OptimalWaitConfig':
        """
        Load configuration from environment variables or .env file.

        Recognized variables: OPTWAIT_LOG_LEVEL, OPTWAIT_LOG_FILE,
        OPTWAIT_ASSIGNMENT_PROB, OPTWAIT_BASELINE_TAU, OPTWAIT_UPPER_BOUND_FACTOR.

        Returns:
            OptimalWaitConfig instance

        Raises:
            ConfigError: If a variable is set to an invalid value
        """
        load_dotenv()

        log_level = os.getenv('OPTWAIT_LOG_LEVEL', 'WARNING').upper()
        if log_level not in _LOG_LEVELS:
            logger.error(f"Invalid OPTWAIT_LOG_LEVEL: {log_level}")
            raise ConfigError(f"OPTWAIT_LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}.")

        assignment_prob = _read_float('OPTWAIT_ASSIGNMENT_PROB', 0.35)
        if not 0.0 < assignment_prob < 1.0:
            raise ConfigError("OPTWAIT_ASSIGNMENT_PROB must lie strictly between 0 and 1.")

        baseline_tau = _read_float('OPTWAIT_BASELINE_TAU', 600.0)
        if baseline_tau < 0.0:
            raise ConfigError("OPTWAIT_BASELINE_TAU must be non-negative.")

        factor = _read_float('OPTWAIT_UPPER_BOUND_FACTOR', 10.0)
        if factor <= 1.0:
            raise ConfigError("OPTWAIT_UPPER_BOUND_FACTOR must exceed 1.")

        return cls(
            log_level=log_level,
            log_file=os.getenv('OPTWAIT_LOG_FILE') or None,
            assignment_prob=assignment_prob,
            baseline_tau=baseline_tau,
            numerics=NumericSettings(upper_bound_factor=factor),
        )


def _read_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError as e:
        logger.error(f"{name} is not a number: {raw!r}")
        raise ConfigError(f"{name} must be a number, got {raw!r}.") from e
