"""Configuration modules for the optimal-wait toolchain."""
from .optwait_config import NumericSettings, OptimalWaitConfig

__all__ = ['NumericSettings', 'OptimalWaitConfig']
