"""
CPU models: branch predictor, speculation window and performance counters.
"""

from enum import Enum
from typing import Optional

from pydantic import Field

from .base import BaseModel


class BranchOutcome(str, Enum):
    TAKEN = "taken"
    NOT_TAKEN = "not_taken"


class Serializer(str, Enum):
    """What separates mistraining from the malicious call in a round."""

    DRAIN = "drain"
    FENCE = "fence"
    SYSCALL = "syscall"
    NONE = "none"


class PredictorConfig(BaseModel):
    """Pattern-history table of k-bit saturating counters."""

    counter_bits: int = Field(3, ge=1, le=8)
    initial_counter: int = Field(0, ge=0)

    @property
    def counter_max(self) -> int:
        return (1 << self.counter_bits) - 1

    @property
    def taken_threshold(self) -> int:
        return 1 << (self.counter_bits - 1)


class SpeculationConfig(BaseModel):
    """
    Speculation-window settings.

    ``base_window`` and ``backlog_accrual`` default to the row-buffer miss
    latency when left unset.
    """

    base_window: Optional[int] = Field(None, ge=0)
    backlog_accrual: Optional[int] = Field(None, ge=0)
    fence_drains: bool = False
    fence_cost: int = Field(30, ge=0)
    syscall_cost: int = Field(2000, ge=1000)


class SpeculationContext(BaseModel):
    """Window available to the next transient path."""

    base_window: int = Field(..., ge=0)
    pending_resolution: int = Field(0, ge=0)

    @property
    def effective_window(self) -> int:
        return max(0, self.base_window - self.pending_resolution)


class PmcState(BaseModel):
    """Performance-counter analog."""

    mispredicted_taken_conditional: int = 0
    cycles: int = 0
