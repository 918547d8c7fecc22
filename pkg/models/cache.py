"""
Cache models for the simhammer simulator.
"""

from typing import List

from pydantic import Field, field_validator

from .base import BaseModel, CsvRecord


class CacheConfig(BaseModel):
    """Single-level, physically indexed, LRU set-associative cache."""

    sets: int = Field(4096, ge=1)
    ways: int = Field(12, ge=1)
    line_size: int = Field(64, ge=1)
    policy: str = "LRU"
    trace: bool = False

    @field_validator("line_size")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("line_size must be a power of two")
        return value

    @field_validator("policy")
    @classmethod
    def _lru_only(cls, value: str) -> str:
        if value.upper() != "LRU":
            raise ValueError("only LRU replacement is modelled")
        return "LRU"


class CacheSetState(BaseModel):
    """Resident line numbers of one set, most- to least-recently used."""

    index: int
    lines: List[int]


class CacheEvent(CsvRecord):
    """One cache operation, for the optional debugging trace."""

    cycle: int
    op: str
    pa: int
    set: int
    hit: bool

    @classmethod
    def csv_header(cls) -> List[str]:
        return ["cycle", "op", "pa", "set", "hit"]

    def csv_row(self) -> List[object]:
        return [self.cycle, self.op, self.pa, self.set, int(self.hit)]
