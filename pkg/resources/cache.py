"""
Cache resource: a single physically indexed LRU level in front of DRAM.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..exceptions import InsufficientEvictionSetError
from ..models.cache import CacheEvent, CacheSetState
from .base import BaseResource

logger = logging.getLogger(__name__)


class CacheResource(BaseResource):
    """
    Set-associative cache with true LRU replacement.

    Each set is a list of resident line numbers, most recently used first.
    """

    def __init__(self, sim):
        super().__init__(sim)
        self.settings = self._config.cache
        self._sets: Dict[int, List[int]] = {}
        self.trace_events: List[CacheEvent] = []

    def line_of(self, pa: int) -> int:
        return pa // self.settings.line_size

    def set_index(self, pa: int) -> int:
        return self.line_of(pa) % self.settings.sets

    def is_resident(self, pa: int) -> bool:
        return self.line_of(pa) in self._sets.get(self.set_index(pa), ())

    def cached_access(self, pa: int, now: Optional[int] = None) -> Tuple[int, bool]:
        """
        Load through the cache. Returns ``(latency, hit)``.

        Raises:
            AddressError: If ``pa`` is outside physical memory
        """
        addr = self._sim.dram.map_physical(pa)
        now = self._sim.now if now is None else now
        line = self.line_of(pa)
        index = line % self.settings.sets
        lines = self._sets.setdefault(index, [])
        if line in lines:
            lines.remove(line)
            lines.insert(0, line)
            latency, hit = self._timing.cache_hit, True
        else:
            latency, _ = self._sim.dram.access(addr, now)
            lines.insert(0, line)
            if len(lines) > self.settings.ways:
                lines.pop()
            hit = False
        self._trace(now, "load", pa, index, hit)
        return latency, hit

    def peek_latency(self, pa: int) -> int:
        """Latency ``cached_access`` would return, without side effects."""
        addr = self._sim.dram.map_physical(pa)
        if self.is_resident(pa):
            return self._timing.cache_hit
        return self._sim.dram.peek_latency(addr)

    def flush(self, pa: int) -> int:
        """Evict the line holding ``pa`` if resident. Returns the clflush cost."""
        index = self.set_index(pa)
        lines = self._sets.get(index)
        line = self.line_of(pa)
        resident = bool(lines) and line in lines
        if resident:
            lines.remove(line)
        self._trace(self._sim.now, "flush", pa, index, resident)
        return self._timing.clflush_cost

    def build_eviction_set(self, target_pa: int, size: int) -> List[int]:
        """
        Return ``size`` distinct addresses congruent with ``target_pa``.

        Accessing all of them after the target evicts it under LRU.

        Raises:
            InsufficientEvictionSetError: If ``size`` is below the associativity
                or memory holds fewer congruent lines
        """
        ways = self.settings.ways
        if size < ways:
            raise InsufficientEvictionSetError(
                f"eviction set of {size} lines cannot evict from a {ways}-way set",
                size=size,
                ways=ways,
            )
        stride = self.settings.sets * self.settings.line_size
        base = self.line_of(target_pa) * self.settings.line_size
        congruent = range(base % stride, self._config.geometry.capacity, stride)
        position = base // stride
        # Lines after the target first, then wrap around to the start of memory.
        candidates = [*congruent[position + 1 :], *congruent[:position]]
        if len(candidates) < size:
            raise InsufficientEvictionSetError(
                f"memory holds only {len(candidates)} lines congruent with {target_pa:#x}",
                size=size,
                ways=ways,
            )
        return candidates[:size]

    def resident_lines(self, index: int) -> CacheSetState:
        return CacheSetState(index=index, lines=list(self._sets.get(index, [])))

    def state_key(self) -> Tuple:
        return tuple(sorted((index, tuple(lines)) for index, lines in self._sets.items() if lines))

    def _trace(self, now: int, op: str, pa: int, index: int, hit: bool) -> None:
        if self.settings.trace:
            self.trace_events.append(CacheEvent(cycle=now, op=op, pa=pa, set=index, hit=hit))

    def write_trace(self, path: Union[str, Path]) -> Path:
        """Dump the recorded cache events as CSV."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CacheEvent.csv_header())
            for event in self.trace_events:
                writer.writerow(event.csv_row())
        logger.info("wrote %d cache events to %s", len(self.trace_events), path)
        return path
