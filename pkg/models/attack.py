"""
Attack models: aggressor pairs, attacker view, scan and flip reports.
"""

from enum import Enum
from typing import List, Optional

from pydantic import Field

from .base import BaseModel, CsvRecord
from .dram import DramAddress, FlipEvent
from .gadget import Address


class MappingMode(str, Enum):
    IDENTITY = "identity"
    RANDOMIZED = "randomized"


class HammerMode(str, Enum):
    """Hybrid: transient access to a, direct access to b. Dual: both transient."""

    HYBRID = "hybrid"
    DUAL = "dual"


class FlushMode(str, Enum):
    CLFLUSH = "clflush"
    EVICT = "evict"


class AttackerView(BaseModel):
    """What the attacker knows about the virtual-to-physical mapping."""

    mapping_mode: MappingMode = MappingMode.IDENTITY
    knows_physical: bool = False
    page_size: int = Field(4096, ge=64)


class AttackConfig(BaseModel):
    """
    Hammering parameters.

    ``train_k`` and ``drain_len`` override the calibrated values when set.
    Budgets are in virtual cycles.
    """

    train_k: Optional[int] = Field(None, ge=0)
    drain_len: Optional[int] = Field(None, ge=0)
    padding: int = Field(0, ge=0)
    budget_cycles: int = Field(780_000_000_000, ge=0)
    mode: HammerMode = HammerMode.HYBRID
    flush_mode: FlushMode = FlushMode.CLFLUSH
    eviction_set_size: Optional[int] = Field(None, ge=1)
    fast_forward: bool = True
    scan_region_start: Address = Field(0, ge=0)
    scan_region_bytes: int = Field(4 * 1024 * 1024, ge=0)
    scan_budget_cycles: Optional[int] = Field(None, ge=0)
    scan_padding: int = Field(0, ge=0)


class HammerPair(BaseModel):
    """
    Two aggressor addresses in the same bank.

    ``dram_a``/``dram_b`` are locations recorded while the pair was found in
    calibration mode; hammering trusts them instead of querying the page map.
    """

    addr_a: int = Field(..., ge=0)
    addr_b: int = Field(..., ge=0)
    dram_a: Optional[DramAddress] = None
    dram_b: Optional[DramAddress] = None

    @property
    def victim_row(self) -> Optional[int]:
        if self.dram_a is None or self.dram_b is None:
            return None
        return (self.dram_a.row + self.dram_b.row) // 2


class ScanHit(CsvRecord):
    """A pair that flipped bits during the scan, with the flips it caused."""

    pair: HammerPair
    victims: List[FlipEvent]

    @classmethod
    def csv_header(cls) -> List[str]:
        return ["addr_a", "addr_b", "bank", "row_a", "row_b", "victim_row"]

    def csv_row(self) -> List[object]:
        pair = self.pair
        return [
            pair.addr_a,
            pair.addr_b,
            pair.dram_a.bank,
            pair.dram_a.row,
            pair.dram_b.row,
            pair.victim_row,
        ]


class ScanResult(BaseModel):
    hits: List[ScanHit] = []
    pairs_tested: int = 0
    partial: bool = False
    virtual_time: int = 0


class FlipReport(BaseModel):
    """Result of one hammering run or of the full attack."""

    flips: List[FlipEvent] = []
    iterations: int = 0
    virtual_time: int = 0
    wall_time: float = 0.0
    success: bool = False
    pair: Optional[HammerPair] = None
    no_target: bool = False
    round_cost: Optional[int] = None
    setup_cycles: int = 0
    start_cycle: int = 0
    scan_virtual_time: Optional[int] = None

    @property
    def time_to_first_flip(self) -> Optional[int]:
        if not self.flips:
            return None
        return self.flips[0].cycle - self.start_cycle
