"""
DRAM models for the simhammer simulator.
"""

from enum import Enum
from typing import List, Tuple

from pydantic import Field, field_validator, model_validator

from .base import BaseModel, CsvRecord


BankKey = Tuple[int, int, int, int]
RowKey = Tuple[int, int, int, int, int]


class FlipDirection(str, Enum):
    """Direction a vulnerable cell flips in."""

    ZERO_TO_ONE = "0to1"
    ONE_TO_ZERO = "1to0"


class DramGeometry(BaseModel):
    """Channel/DIMM/rank/bank/row/column organisation of the simulated memory."""

    channels: int = Field(1, ge=1)
    dimms_per_channel: int = Field(1, ge=1)
    ranks: int = Field(2, ge=1)
    banks_per_rank: int = Field(8, ge=1)
    rows_per_bank: int = Field(32768, ge=3)
    cols_per_row: int = Field(1024, ge=1)
    cell_width: int = 8

    @field_validator("cell_width")
    @classmethod
    def _fixed_cell_width(cls, value: int) -> int:
        if value != 8:
            raise ValueError("cell_width is fixed at 8 bytes")
        return value

    @property
    def row_bytes(self) -> int:
        return self.cols_per_row * self.cell_width

    @property
    def capacity(self) -> int:
        """Total capacity in bytes."""
        return (
            self.channels
            * self.dimms_per_channel
            * self.ranks
            * self.banks_per_rank
            * self.rows_per_bank
            * self.cols_per_row
            * self.cell_width
        )


class DramAddress(BaseModel):
    """A cell position inside the DRAM geometry."""

    channel: int = Field(0, ge=0)
    dimm: int = Field(0, ge=0)
    rank: int = Field(0, ge=0)
    bank: int = Field(0, ge=0)
    row: int = Field(0, ge=0)
    col: int = Field(0, ge=0)

    class Config:
        frozen = True

    @property
    def bank_key(self) -> BankKey:
        return (self.channel, self.dimm, self.rank, self.bank)

    @property
    def row_key(self) -> RowKey:
        return (self.channel, self.dimm, self.rank, self.bank, self.row)

    def same_bank(self, other: "DramAddress") -> bool:
        return self.bank_key == other.bank_key

    def with_row(self, row: int) -> "DramAddress":
        return self.model_copy(update={"row": row})


class FlipCell(BaseModel):
    """One physically vulnerable cell of the flip template."""

    victim: DramAddress
    bit: int = Field(..., ge=0, le=63)
    direction: FlipDirection
    threshold: int = Field(..., gt=0)

    @property
    def source_bit(self) -> int:
        return 1 if self.direction == FlipDirection.ONE_TO_ZERO.value else 0

    @property
    def cell_key(self) -> Tuple[RowKey, int, int]:
        return (self.victim.row_key, self.victim.col, self.bit)


class FlipTemplate(BaseModel):
    """Simulator ground truth: which cells flip, which way, and after how many hammers."""

    cells: List[FlipCell] = []

    @model_validator(mode="after")
    def _unique_cells(self) -> "FlipTemplate":
        keys = [cell.cell_key for cell in self.cells]
        if len(keys) != len(set(keys)):
            raise ValueError("flip template lists the same cell twice")
        return self

    @property
    def is_empty(self) -> bool:
        return not self.cells


class FlipEvent(CsvRecord):
    """A cell that flipped, and the virtual cycle it flipped at."""

    victim: DramAddress
    bit: int
    direction: FlipDirection
    cycle: int

    @classmethod
    def csv_header(cls) -> List[str]:
        return ["cycle", "channel", "dimm", "rank", "bank", "row", "col", "bit", "direction"]

    def csv_row(self) -> List[object]:
        v = self.victim
        return [self.cycle, v.channel, v.dimm, v.rank, v.bank, v.row, v.col, self.bit, self.direction]


class JitterSpec(BaseModel):
    """Bounded uniform integer noise added to sampled round costs."""

    enabled: bool = False
    low: int = -108
    high: int = 108

    @model_validator(mode="after")
    def _ordered(self) -> "JitterSpec":
        if self.low > self.high:
            raise ValueError("jitter.low must not exceed jitter.high")
        return self


class TimingModel(BaseModel):
    """
    Latencies in CPU cycles.

    Only ``cache_hit <= rowbuf_hit <= rowbuf_miss`` is enforced, so equal or
    zero latencies stay valid. The strict ordering
    ``cache_hit < gadget.threshold < rowbuf_hit < rowbuf_miss`` that verification
    rounds rely on is left to the user; the simulator only warns when the
    threshold does not separate hits from DRAM accesses.
    """

    cache_hit: int = Field(40, ge=0)
    rowbuf_hit: int = Field(180, ge=0)
    rowbuf_miss: int = Field(280, ge=0)
    clflush_cost: int = Field(150, ge=0, lt=200)
    alu_op: int = Field(1, ge=0)
    jitter: JitterSpec = Field(default_factory=JitterSpec)

    @model_validator(mode="after")
    def _ordered(self) -> "TimingModel":
        if not (self.cache_hit <= self.rowbuf_hit <= self.rowbuf_miss):
            raise ValueError("timing must satisfy cache_hit <= rowbuf_hit <= rowbuf_miss")
        return self

    def separates(self, threshold: int) -> bool:
        """True when ``threshold`` splits cache hits from every DRAM access."""
        return self.cache_hit < threshold < self.rowbuf_hit


class DramConfig(BaseModel):
    """Refresh, page policy and disturbance settings."""

    refresh_interval_cycles: int = Field(166_400_000, gt=0)
    closed_page: bool = False
    # T_cell counts hammers per aggressor; the two neighbours together must
    # reach threshold_sides * T_cell activations.
    threshold_sides: int = Field(2, ge=1)


class RowActivation(BaseModel):
    """Activation counter of one row inside the current refresh window."""

    row: DramAddress
    activations: int


class DisturbanceState(BaseModel):
    """Snapshot of the disturbance counters."""

    refresh_interval_cycles: int
    last_bulk_refresh: int
    rows: List[RowActivation] = []


class RowBufferState(BaseModel):
    """Snapshot of the open row in every bank that has been touched."""

    open_rows: List[DramAddress] = []


def parse_template_cells(text: str) -> List[FlipCell]:
    """
    Parse the configuration form of a flip template.

    Cells are separated by ``;``. Each cell is either
    ``bank:row:col:bit:direction:threshold`` or
    ``channel:dimm:rank:bank:row:col:bit:direction:threshold``.
    """
    cells: List[FlipCell] = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(":")]
        if len(parts) == 6:
            channel = dimm = rank = 0
            bank, row, col, bit, direction, threshold = parts
        elif len(parts) == 9:
            channel, dimm, rank, bank, row, col, bit, direction, threshold = parts
        else:
            raise ValueError(f"template cell '{chunk}' must have 6 or 9 ':'-separated fields")
        cells.append(
            FlipCell(
                victim=DramAddress(
                    channel=int(channel), dimm=int(dimm), rank=int(rank),
                    bank=int(bank), row=int(row), col=int(col),
                ),
                bit=int(bit),
                direction=FlipDirection(direction),
                threshold=int(threshold.replace("_", "")),
            )
        )
    return cells
