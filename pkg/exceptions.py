"""
simhammer Exceptions

Custom exception classes for the simhammer simulator.
"""

from typing import Optional, Dict, Any


class SimHammerError(Exception):
    """Base exception class for all simhammer errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class InvalidConfigurationError(SimHammerError):
    """Raised when the simulator configuration is invalid."""
    pass


class AddressError(SimHammerError):
    """Raised when a physical or DRAM address lies outside the configured geometry."""
    pass


class InsufficientEvictionSetError(SimHammerError):
    """Raised when an eviction set smaller than the cache associativity is requested."""

    def __init__(self, message: str, size: Optional[int] = None, ways: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.size = size
        self.ways = ways


class MisuseError(SimHammerError):
    """Raised when an operation is invoked outside its precondition."""
    pass


class CalibrationError(SimHammerError):
    """Raised when a calibration procedure cannot find a working parameter."""
    pass


class ThreatModelError(SimHammerError):
    """Raised when attacker code asks for knowledge its view does not grant."""
    pass
