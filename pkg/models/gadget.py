"""
Victim gadget, round and calibration models.
"""

from typing import Any, Optional

from pydantic import BeforeValidator, Field, model_validator
from typing_extensions import Annotated

from .base import BaseModel
from .cpu import Serializer


ADDRESS_MASK = (1 << 64) - 1


def parse_address(value: Any) -> Any:
    """Accept ``0x``-prefixed strings for address fields."""
    if isinstance(value, str):
        return int(value.strip(), 0)
    return value


Address = Annotated[int, BeforeValidator(parse_address)]


class VictimArray(BaseModel):
    """The bounds-checked array of the victim function (byte elements)."""

    base: int = Field(..., ge=0)
    array_size: int = Field(..., ge=1)
    array_size_location: int = Field(..., ge=0)
    line_size: int = 64

    @model_validator(mode="after")
    def _distinct_lines(self) -> "VictimArray":
        first = self.base // self.line_size
        last = (self.base + self.array_size - 1) // self.line_size
        if first <= self.array_size_location // self.line_size <= last:
            raise ValueError("array_size_location must not share a cache line with the array")
        return self

    def index_of(self, address: int) -> int:
        """Unsigned index whose element address is ``address``."""
        return (address - self.base) & ADDRESS_MASK

    def address_of(self, index: int) -> int:
        return (self.base + index) & ADDRESS_MASK

    def in_bounds(self, index: int) -> bool:
        return (index & ADDRESS_MASK) < self.array_size


class GadgetConfig(BaseModel):
    """Placement of the victim array and the verification target."""

    victim_base: Address = Field(0x10000000, ge=0)
    array_size: int = Field(16, ge=1)
    array_size_location: Address = Field(0x10001000, ge=0)
    vul_addr: Address = Field(0x12000000, ge=0)
    branch_id: str = "victim_bounds_check"
    threshold: int = Field(100, gt=0)
    serializer: Serializer = Serializer.DRAIN


class CalibrationConfig(BaseModel):
    """Trial counts and search bounds of the calibration procedures."""

    trials: int = Field(1000, ge=1)
    baseline_training: int = Field(5, ge=0)
    max_training: int = Field(64, ge=1)
    max_drain: int = Field(4096, ge=0)


class VictimCall(BaseModel):
    """What one victim-function invocation did."""

    index: int
    in_bounds: bool
    predicted_taken: bool
    transient_executed: bool
    cost: int


class RoundResult(BaseModel):
    """Outcome of one verification round."""

    success: bool
    probe_latency: int
    round_cost: int
    mispredict_count_delta: int
    executed: bool


class CalibrationReport(BaseModel):
    """Output of the calibrate command."""

    min_training: int
    drain_len: int
    round_cost: int
    padding: Optional[int] = None
