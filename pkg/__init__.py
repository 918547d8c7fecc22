"""
simhammer - a cycle-approximate simulator of speculative rowhammer attacks.

The simulator models DRAM disturbance, a set-associative cache, a branch
predictor with a bounded speculation window, and a bounds-checked victim
gadget, and drives the attack pipeline and measurement experiments on top.
"""

from .simulator import Simulator
from .config import load_config, build_config, preset_path
from .exceptions import (
    SimHammerError,
    InvalidConfigurationError,
    AddressError,
    InsufficientEvictionSetError,
    MisuseError,
    CalibrationError,
    ThreatModelError,
)

__version__ = "0.1.0"
__all__ = [
    "Simulator",
    "load_config",
    "build_config",
    "preset_path",
    "SimHammerError",
    "InvalidConfigurationError",
    "AddressError",
    "InsufficientEvictionSetError",
    "MisuseError",
    "CalibrationError",
    "ThreatModelError",
]
