"""
DRAM resource: address mapping, row buffers, refresh, disturbance and flips.
"""

import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Set, Tuple

from ..exceptions import AddressError
from ..models.dram import (
    BankKey,
    DisturbanceState,
    DramAddress,
    FlipCell,
    FlipDirection,
    FlipEvent,
    RowActivation,
    RowBufferState,
    RowKey,
)
from .base import BaseResource

logger = logging.getLogger(__name__)

CellKey = Tuple[RowKey, int, int]


class DramResource(BaseResource):
    """
    Cycle-approximate DRAM.

    Rows are activated on every row-buffer miss (every access under the
    closed-page policy). A template cell in row v flips as soon as
    ``act[v-1] + act[v+1]`` reaches ``threshold_sides * T_cell`` within
    the current refresh window. All activation counters reset together at
    each refresh boundary.

    Between ``begin_round`` and ``end_round`` activations are held back and
    committed when the round ends. A round that ends past the refresh
    boundary following its start counts in no window, so only whole rounds
    inside one window add up.
    """

    def __init__(self, sim):
        super().__init__(sim)
        self.geometry = self._config.geometry
        self.settings = self._config.dram
        self.refresh_interval = self.settings.refresh_interval_cycles
        self.last_bulk_refresh = 0
        self.total_activations = 0
        self.flip_events: List[FlipEvent] = []

        self._open_rows: Dict[BankKey, int] = {}
        self._activations: Dict[RowKey, int] = {}
        self._pending: Optional[List[Tuple[DramAddress, int]]] = None
        self._round_boundary = 0
        self._memory: Dict[int, int] = {}
        self._background: Dict[int, int] = {}
        self._cells_by_row: Dict[RowKey, List[FlipCell]] = defaultdict(list)
        self._cells_by_word: Dict[int, List[FlipCell]] = defaultdict(list)
        self._cells: Dict[CellKey, FlipCell] = {}
        self._flipped: Set[CellKey] = set()

        for cell in self._config.template.cells:
            self.validate(cell.victim)
            word = self.physical_of(cell.victim) // 8
            self._cells[cell.cell_key] = cell
            self._cells_by_row[cell.victim.row_key].append(cell)
            self._cells_by_word[word].append(cell)
            if cell.source_bit:
                self._background[word] = self._background.get(word, 0) | (1 << cell.bit)

    # Address mapping

    def validate(self, addr: DramAddress) -> None:
        g = self.geometry
        if (
            addr.channel >= g.channels
            or addr.dimm >= g.dimms_per_channel
            or addr.rank >= g.ranks
            or addr.bank >= g.banks_per_rank
            or addr.row >= g.rows_per_bank
            or addr.col >= g.cols_per_row
        ):
            raise AddressError(
                f"DRAM address {addr.model_dump()} is outside the geometry",
                details={"address": addr.model_dump()},
            )

    def map_physical(self, pa: int) -> DramAddress:
        """
        Slice a physical byte address into DRAM coordinates.

        From the least significant end: column (8-byte cells), bank, row,
        rank, DIMM, channel.
        """
        g = self.geometry
        if pa < 0 or pa >= g.capacity:
            raise AddressError(
                f"physical address {pa:#x} is outside the {g.capacity:#x}-byte memory",
                details={"pa": pa, "capacity": g.capacity},
            )
        rest = pa // g.cell_width
        rest, col = divmod(rest, g.cols_per_row)
        rest, bank = divmod(rest, g.banks_per_rank)
        rest, row = divmod(rest, g.rows_per_bank)
        rest, rank = divmod(rest, g.ranks)
        channel, dimm = divmod(rest, g.dimms_per_channel)
        return DramAddress(channel=channel, dimm=dimm, rank=rank, bank=bank, row=row, col=col)

    def physical_of(self, addr: DramAddress) -> int:
        """Byte address of the first byte of the cell at ``addr``."""
        self.validate(addr)
        g = self.geometry
        index = addr.channel
        index = index * g.dimms_per_channel + addr.dimm
        index = index * g.ranks + addr.rank
        index = index * g.rows_per_bank + addr.row
        index = index * g.banks_per_rank + addr.bank
        index = index * g.cols_per_row + addr.col
        return index * g.cell_width

    # Row buffer and refresh

    def access(self, addr: DramAddress, now: Optional[int] = None) -> Tuple[int, bool]:
        """Access one cell. Returns ``(latency, opened)``."""
        self.validate(addr)
        now = self._sim.now if now is None else now
        self.refresh_tick(now)
        bank = addr.bank_key
        if not self.settings.closed_page:
            if self._open_rows.get(bank) == addr.row:
                return self._timing.rowbuf_hit, False
            self._open_rows[bank] = addr.row
        self._activate(addr, now)
        return self._timing.rowbuf_miss, True

    def peek_latency(self, addr: DramAddress) -> int:
        """Latency ``access`` would return, without touching any state."""
        if not self.settings.closed_page and self._open_rows.get(addr.bank_key) == addr.row:
            return self._timing.rowbuf_hit
        return self._timing.rowbuf_miss

    def open_row(self, bank: BankKey) -> Optional[int]:
        return self._open_rows.get(bank)

    def refresh_tick(self, now: Optional[int] = None) -> None:
        now = self._sim.now if now is None else now
        elapsed = now - self.last_bulk_refresh
        if elapsed < self.refresh_interval:
            return
        self.last_bulk_refresh += (elapsed // self.refresh_interval) * self.refresh_interval
        if self._activations:
            logger.debug("bulk refresh at cycle %d clears %d rows", self.last_bulk_refresh, len(self._activations))
        self._activations.clear()

    def next_refresh_boundary(self, now: Optional[int] = None) -> int:
        """First refresh boundary strictly after ``now``."""
        now = self._sim.now if now is None else now
        windows = (now - self.last_bulk_refresh) // self.refresh_interval + 1
        return self.last_bulk_refresh + windows * self.refresh_interval

    def activations(self, addr: DramAddress) -> int:
        return self._activations.get(addr.row_key, 0)

    # Disturbance

    def _activate(self, addr: DramAddress, now: int) -> None:
        self.total_activations += 1
        if self._pending is not None:
            self._pending.append((addr, now))
            return
        self._commit(addr, now)

    def _commit(self, addr: DramAddress, now: int) -> None:
        key = addr.row_key
        self._activations[key] = self._activations.get(key, 0) + 1
        for victim in (addr.row - 1, addr.row + 1):
            cells = self._cells_by_row.get(key[:4] + (victim,))
            if cells:
                self._check_cells(cells, now)

    def _disturbance(self, row: RowKey) -> int:
        below = self._activations.get(row[:4] + (row[4] - 1,), 0)
        above = self._activations.get(row[:4] + (row[4] + 1,), 0)
        return below + above

    def _flip_threshold(self, cell: FlipCell) -> int:
        return self.settings.threshold_sides * cell.threshold

    def _check_cells(self, cells: Iterable[FlipCell], now: int) -> List[FlipEvent]:
        events = []
        for cell in cells:
            if cell.cell_key in self._flipped:
                continue
            if self._disturbance(cell.victim.row_key) >= self._flip_threshold(cell):
                events.append(self._flip(cell, now))
        return events

    def check_flips(self, now: Optional[int] = None) -> List[FlipEvent]:
        """Apply the flip rule to every armed template cell; returns new flips."""
        now = self._sim.now if now is None else now
        self.refresh_tick(now)
        return self._check_cells(self._cells.values(), now)

    def _flip(self, cell: FlipCell, now: int) -> FlipEvent:
        pa = self.physical_of(cell.victim)
        value = self.read_word(pa)
        if cell.direction == FlipDirection.ZERO_TO_ONE.value:
            value |= 1 << cell.bit
        else:
            value &= ~(1 << cell.bit)
        self._memory[pa // 8] = value
        self._flipped.add(cell.cell_key)
        event = FlipEvent(victim=cell.victim, bit=cell.bit, direction=cell.direction, cycle=now)
        self.flip_events.append(event)
        logger.info(
            "bit flip at cycle %d: bank %d row %d col %d bit %d (%s)",
            now, cell.victim.bank, cell.victim.row, cell.victim.col, cell.bit, cell.direction,
        )
        return event

    def is_flipped(self, cell: FlipCell) -> bool:
        return cell.cell_key in self._flipped

    # Memory contents

    def read_word(self, pa: int) -> int:
        self.map_physical(pa)
        word = pa // 8
        return self._memory.get(word, self._background.get(word, 0))

    def write_word(self, pa: int, value: int) -> None:
        """Architectural write; re-arms any template cell in the word."""
        self.map_physical(pa)
        word = pa // 8
        self._memory[word] = value & ((1 << 64) - 1)
        for cell in self._cells_by_word.get(word, ()):
            self._flipped.discard(cell.cell_key)

    def restore_flips(self, events: Iterable[FlipEvent]) -> None:
        """Write the source value back into flipped cells."""
        for event in events:
            pa = self.physical_of(event.victim)
            value = self.read_word(pa)
            if event.direction == FlipDirection.ONE_TO_ZERO.value:
                value |= 1 << event.bit
            else:
                value &= ~(1 << event.bit)
            self.write_word(pa, value)

    def written_words(self) -> Dict[int, int]:
        """Words stored by writes or flips, keyed by physical address."""
        return {word * 8: value for word, value in self._memory.items()}

    # Rounds

    def begin_round(self, now: Optional[int] = None) -> None:
        now = self._sim.now if now is None else now
        self.refresh_tick(now)
        self._round_boundary = self.next_refresh_boundary(now)
        self._pending = []

    def end_round(self, now: Optional[int] = None) -> Dict[RowKey, int]:
        """
        Commit the activations of the open round and return them per row.

        Each activation is checked against the flip rule at its own cycle.
        A round ending after the boundary that followed its start commits
        nothing and returns an empty delta.
        """
        now = self._sim.now if now is None else now
        pending, self._pending = self._pending or [], None
        if now > self._round_boundary:
            if pending:
                logger.debug("round ending at cycle %d straddles the refresh at %d", now, self._round_boundary)
            self.refresh_tick(now)
            return {}
        delta: Dict[RowKey, int] = {}
        for addr, cycle in pending:
            key = addr.row_key
            delta[key] = delta.get(key, 0) + 1
            self._commit(addr, cycle)
        return delta

    # Fast-forward support

    def apply_bulk_activations(self, delta: Dict[RowKey, int], times: int) -> None:
        """Add ``times`` repetitions of a per-round activation delta."""
        for key, count in delta.items():
            self._activations[key] = self._activations.get(key, 0) + count * times
            self.total_activations += count * times

    def rounds_until_threshold(self, delta: Dict[RowKey, int]) -> Optional[int]:
        """
        Largest number of repetitions of ``delta`` that leaves every armed
        cell below its flip threshold, or None when no armed cell is exposed.
        """
        limit: Optional[int] = None
        victims = set()
        for key in delta:
            victims.add(key[:4] + (key[4] - 1,))
            victims.add(key[:4] + (key[4] + 1,))
        for victim in victims:
            cells = self._cells_by_row.get(victim)
            if not cells:
                continue
            per_round = delta.get(victim[:4] + (victim[4] - 1,), 0) + delta.get(victim[:4] + (victim[4] + 1,), 0)
            for cell in cells:
                if cell.cell_key in self._flipped:
                    continue
                need = self._flip_threshold(cell) - self._disturbance(victim)
                rounds = max(0, -(-need // per_round) - 1)
                limit = rounds if limit is None else min(limit, rounds)
        return limit

    # Snapshots

    def state_key(self) -> Tuple:
        return tuple(sorted(self._open_rows.items()))

    def disturbance_state(self) -> DisturbanceState:
        rows = [
            RowActivation(
                row=DramAddress(channel=k[0], dimm=k[1], rank=k[2], bank=k[3], row=k[4]),
                activations=count,
            )
            for k, count in sorted(self._activations.items())
        ]
        return DisturbanceState(
            refresh_interval_cycles=self.refresh_interval,
            last_bulk_refresh=self.last_bulk_refresh,
            rows=rows,
        )

    def row_buffer_state(self) -> RowBufferState:
        return RowBufferState(
            open_rows=[
                DramAddress(channel=k[0], dimm=k[1], rank=k[2], bank=k[3], row=row)
                for k, row in sorted(self._open_rows.items())
            ]
        )
