"""
Attack resource: pair scanning, direct and speculative hammering, and the full pipeline.
"""

import logging
import time
from typing import Callable, Dict, List, Optional, Tuple

from ..exceptions import MisuseError
from ..models.attack import (
    FlipReport,
    FlushMode,
    HammerMode,
    HammerPair,
    ScanHit,
    ScanResult,
)
from ..models.dram import DramAddress, RowKey
from .base import BaseResource
from .hammer_loop import HammerLoop, HammerOutcome

logger = logging.getLogger(__name__)


class AttackResource(BaseResource):
    """
    The three-step pipeline: collect vulnerable aggressor pairs with a
    double-sided scanner, hammer them through speculative out-of-bounds
    accesses, and report the first bit flip.
    """

    @property
    def _settings(self):
        return self._config.attack

    # Helpers

    def direct_round_cost(self, padding: int = 0) -> int:
        """Cost of one direct double-sided round: two DRAM loads and two flushes."""
        t = self._timing
        return 2 * t.rowbuf_miss + 2 * t.clflush_cost + padding * t.alu_op

    def round_parameters(self) -> Tuple[int, int]:
        """
        Training count and drain length for speculative rounds.

        Raises:
            MisuseError: If neither the configuration nor a calibration provides them
        """
        train_k, drain_len = self._settings.train_k, self._settings.drain_len
        calibration = self._sim.calibration
        if train_k is None and calibration is not None:
            train_k = calibration.min_training
        if drain_len is None and calibration is not None:
            drain_len = calibration.drain_len
        if train_k is None or drain_len is None:
            raise MisuseError(
                "speculative hammering needs train_k and drain_len; run the calibrations first",
                details={"train_k": train_k, "drain_len": drain_len},
            )
        return train_k, drain_len

    def pair_locations(self, pair: HammerPair) -> Tuple[DramAddress, DramAddress]:
        """
        DRAM locations of the pair, from its recorded hints or the page map.

        Raises:
            MisuseError: If the rows are not distinct rows of one bank
            ThreatModelError: If hints are missing and the page map is off limits
        """
        dram = self._sim.dram
        space = self._sim.address_space
        dram_a = pair.dram_a or dram.map_physical(space.physical_of(pair.addr_a))
        dram_b = pair.dram_b or dram.map_physical(space.physical_of(pair.addr_b))
        if not dram_a.same_bank(dram_b):
            raise MisuseError(
                "aggressors lie in different banks and cannot hammer a common victim",
                details={"bank_a": dram_a.bank_key, "bank_b": dram_b.bank_key},
            )
        if dram_a.row == dram_b.row:
            raise MisuseError("aggressors share a row", details={"row": dram_a.row})
        return dram_a, dram_b

    def pair_around(self, victim: DramAddress) -> HammerPair:
        """
        Double-sided pair sandwiching ``victim`` (needs physical knowledge).

        Raises:
            MisuseError: If the victim row has no neighbour on one side
        """
        if victim.row == 0 or victim.row + 1 >= self._config.geometry.rows_per_bank:
            raise MisuseError(f"row {victim.row} has no neighbour on both sides", details={"row": victim.row})
        dram = self._sim.dram
        space = self._sim.address_space
        dram_a = victim.with_row(victim.row - 1)
        dram_b = victim.with_row(victim.row + 1)
        return HammerPair(
            addr_a=space.alias_physical(dram.physical_of(dram_a)),
            addr_b=space.alias_physical(dram.physical_of(dram_b)),
            dram_a=dram_a,
            dram_b=dram_b,
        )

    def _report(self, outcome: HammerOutcome, pair: Optional[HammerPair], start: int, setup: int = 0) -> FlipReport:
        return FlipReport(
            flips=outcome.flips,
            iterations=outcome.iterations,
            virtual_time=outcome.elapsed,
            success=bool(outcome.flips),
            pair=pair,
            round_cost=outcome.last_round_cost,
            setup_cycles=setup,
            start_cycle=start,
        )

    def _jitter_delay(self) -> None:
        # Noise can only stretch a round; the access sequence is fixed.
        if self._timing.jitter.enabled:
            self._sim.advance(max(0, self._sim.sample_jitter()))

    # Direct hammering

    def direct_hammer(
        self,
        pair: HammerPair,
        budget_cycles: int,
        padding: int = 0,
        max_rounds: Optional[int] = None,
        stop_on_flip: bool = True,
    ) -> FlipReport:
        """Classic double-sided hammering: load a, load b, flush both, pad."""
        self.pair_locations(pair)
        cpu = self._sim.cpu

        def direct_round() -> None:
            cpu.load_virtual(pair.addr_a)
            cpu.load_virtual(pair.addr_b)
            cpu.clflush_virtual(pair.addr_a)
            cpu.clflush_virtual(pair.addr_b)
            cpu.nops(padding)
            self._jitter_delay()

        start = self._sim.now
        outcome = HammerLoop(
            self._sim,
            direct_round,
            budget_cycles,
            max_rounds=max_rounds,
            stop_on_flip=stop_on_flip,
            fast_forward=self._settings.fast_forward,
        ).run()
        return self._report(outcome, pair, start)

    # Scanning

    def candidate_pairs(self, region_start: int, region_bytes: int) -> List[HammerPair]:
        """
        Every (r, r+2) row pair of one bank that the region touches.

        Walks the region in steps no larger than a page or a row chunk and
        resolves each step through the page map.
        """
        g = self._config.geometry
        space = self._sim.address_space
        dram = self._sim.dram
        step = min(space.page_size, g.row_bytes)
        first: Dict[RowKey, Tuple[int, DramAddress]] = {}
        for va in range(region_start, region_start + region_bytes, step):
            addr = dram.map_physical(space.physical_of(va))
            first.setdefault(addr.row_key, (va, addr))
        pairs = []
        for key in sorted(first):
            partner = key[:4] + (key[4] + 2,)
            if partner in first:
                va_a, dram_a = first[key]
                va_b, dram_b = first[partner]
                pairs.append(HammerPair(addr_a=va_a, addr_b=va_b, dram_a=dram_a, dram_b=dram_b))
        return pairs

    def scan_vulnerable_pairs(
        self,
        region_start: Optional[int] = None,
        region_bytes: Optional[int] = None,
        budget_cycles: Optional[int] = None,
        padding: Optional[int] = None,
    ) -> ScanResult:
        """
        Double-sided scan of every candidate pair, one refresh window each.

        Runs in calibration mode. Flips are recorded with their pair and
        rewritten afterwards, so memory leaves the scan unchanged.
        """
        settings = self._settings
        region_start = settings.scan_region_start if region_start is None else region_start
        region_bytes = settings.scan_region_bytes if region_bytes is None else region_bytes
        budget_cycles = settings.scan_budget_cycles if budget_cycles is None else budget_cycles
        padding = settings.scan_padding if padding is None else padding
        sim = self._sim
        window = sim.dram.refresh_interval
        start = sim.now
        result = ScanResult()

        with sim.address_space.calibration_mode():
            pairs = self.candidate_pairs(region_start, region_bytes)
            logger.info("scanning %d candidate pairs", len(pairs))
            for pair in pairs:
                if budget_cycles is not None and sim.now - start >= budget_cycles:
                    result.partial = True
                    logger.warning("scan budget exhausted after %d of %d pairs", result.pairs_tested, len(pairs))
                    break
                sim.idle_until_refresh()
                report = self.direct_hammer(pair, window, padding=padding, stop_on_flip=False)
                result.pairs_tested += 1
                if report.flips:
                    logger.info(
                        "pair bank %d rows %d/%d flipped %d cells",
                        pair.dram_a.bank, pair.dram_a.row, pair.dram_b.row, len(report.flips),
                    )
                    result.hits.append(ScanHit(pair=pair, victims=report.flips))
                    sim.dram.restore_flips(report.flips)

        result.virtual_time = sim.now - start
        return result

    # Speculative hammering

    def _flusher(self, va: int, location: DramAddress, flush_mode: str) -> Callable[[], None]:
        cpu = self._sim.cpu
        if flush_mode == FlushMode.CLFLUSH.value:
            return lambda: cpu.clflush_virtual(va)
        cache = self._sim.cache
        target = self._sim.dram.physical_of(location) + va % self._config.geometry.cell_width
        size = self._settings.eviction_set_size or self._config.cache.ways
        eviction_set = cache.build_eviction_set(target, size)

        def evict() -> None:
            for pa in eviction_set:
                cpu.load(pa)

        return evict

    def _malicious_index(self, va: int) -> int:
        victim = self._sim.gadget.victim
        index = victim.index_of(va)
        if victim.in_bounds(index):
            raise MisuseError(f"aggressor {va:#x} lies inside the victim array", details={"va": va})
        return index

    def speculative_hammer(
        self,
        pair: HammerPair,
        budget_cycles: Optional[int] = None,
        mode: Optional[str] = None,
        padding: Optional[int] = None,
        flush_mode: Optional[str] = None,
    ) -> FlipReport:
        """
        Hammer ``pair`` through the victim gadget.

        Hybrid rounds reach ``addr_a`` with a transient out-of-bounds access
        and ``addr_b`` with a plain load; dual rounds reach both transiently.
        The victim is primed first; the priming cost is reported as setup.

        Raises:
            MisuseError: If the pair is not hammerable or calibrations are missing
        """
        settings = self._settings
        budget_cycles = settings.budget_cycles if budget_cycles is None else budget_cycles
        mode = mode or settings.mode
        padding = settings.padding if padding is None else padding
        flush_mode = flush_mode or settings.flush_mode
        train_k, drain_len = self.round_parameters()
        dram_a, dram_b = self.pair_locations(pair)
        index_a = self._malicious_index(pair.addr_a)
        index_b = self._malicious_index(pair.addr_b)
        flush_a = self._flusher(pair.addr_a, dram_a, flush_mode)
        flush_b = self._flusher(pair.addr_b, dram_b, flush_mode)

        sim = self._sim
        if budget_cycles <= 0:
            return FlipReport(pair=pair, start_cycle=sim.now)
        cpu = sim.cpu
        gadget = sim.gadget
        size = gadget.victim.array_size

        def mistrain_and_attack(index: int) -> None:
            cpu.enter_round()
            for i in range(train_k):
                gadget.victim_function(i % size)
            cpu.drain(drain_len)
            gadget.victim_function(index)

        def hybrid_round() -> None:
            flush_a()
            flush_b()
            mistrain_and_attack(index_a)
            cpu.load_virtual(pair.addr_b)
            cpu.nops(padding)
            self._jitter_delay()

        def dual_round() -> None:
            flush_a()
            flush_b()
            mistrain_and_attack(index_a)
            mistrain_and_attack(index_b)
            cpu.nops(padding)
            self._jitter_delay()

        setup = gadget.prime()
        start = sim.now
        outcome = HammerLoop(
            sim,
            hybrid_round if mode == HammerMode.HYBRID.value else dual_round,
            budget_cycles,
            fast_forward=settings.fast_forward,
        ).run()
        return self._report(outcome, pair, start, setup)

    def one_location_hammer(
        self,
        addr: int,
        budget_cycles: Optional[int] = None,
        padding: Optional[int] = None,
    ) -> FlipReport:
        """
        Speculatively hammer a single address under the closed-page policy.

        Raises:
            MisuseError: If the memory controller keeps rows open
        """
        if not self._config.dram.closed_page:
            raise MisuseError(
                "one-location hammering needs the closed-page policy; open rows turn every access into a row-buffer hit",
                details={"closed_page": False},
            )
        settings = self._settings
        budget_cycles = settings.budget_cycles if budget_cycles is None else budget_cycles
        padding = settings.padding if padding is None else padding
        train_k, drain_len = self.round_parameters()
        index = self._malicious_index(addr)
        sim = self._sim
        if budget_cycles <= 0:
            return FlipReport(start_cycle=sim.now)
        cpu = sim.cpu
        gadget = sim.gadget
        size = gadget.victim.array_size

        def one_location_round() -> None:
            cpu.enter_round()
            cpu.clflush_virtual(addr)
            for i in range(train_k):
                gadget.victim_function(i % size)
            cpu.drain(drain_len)
            gadget.victim_function(index)
            cpu.nops(padding)
            self._jitter_delay()

        setup = gadget.prime()
        start = sim.now
        outcome = HammerLoop(sim, one_location_round, budget_cycles, fast_forward=settings.fast_forward).run()
        return self._report(outcome, None, start, setup)

    # Pipeline

    def full_attack(self) -> FlipReport:
        """
        Scan, then hammer every vulnerable pair until the first flip.

        ``virtual_time`` and ``iterations`` cover the hammering rounds only;
        idling to a refresh boundary and priming the victim are counted in
        ``setup_cycles``. The budget applies to hammering time. Returns a
        no-target report when the scan finds nothing.
        """
        wall_start = time.perf_counter()
        sim = self._sim
        settings = self._settings
        if sim.calibration is None and (settings.train_k is None or settings.drain_len is None):
            sim.gadget.calibrate()

        scan = self.scan_vulnerable_pairs()
        if not scan.hits:
            logger.info("scan found no vulnerable pairs")
            return FlipReport(
                no_target=True,
                scan_virtual_time=scan.virtual_time,
                start_cycle=sim.now,
                wall_time=time.perf_counter() - wall_start,
            )

        train_k, drain_len = self.round_parameters()
        # A window that began less than one round ago is as good as a fresh one.
        slack = sim.gadget.measure_round_cost(
            train_k,
            drain_len,
            padding=settings.padding,
            hybrid=settings.mode == HammerMode.HYBRID.value,
            jitter=False,
        )
        remaining = settings.budget_cycles
        iterations = 0
        hammered = 0
        setup = 0
        report = FlipReport()
        for hit in scan.hits:
            if remaining <= 0:
                break
            before = sim.now
            sim.idle_until_refresh(slack)
            setup += sim.now - before
            report = self.speculative_hammer(hit.pair, budget_cycles=remaining)
            iterations += report.iterations
            setup += report.setup_cycles
            hammered += report.virtual_time
            remaining -= report.virtual_time
            if report.success:
                logger.info("first flip after %d hammer rounds", iterations)
                break

        return report.model_copy(
            update={
                "iterations": iterations,
                "setup_cycles": setup,
                "virtual_time": hammered,
                # Earlier pairs' hammering counts towards the time to first flip.
                "start_cycle": report.start_cycle - (hammered - report.virtual_time),
                "scan_virtual_time": scan.virtual_time,
                "wall_time": time.perf_counter() - wall_start,
            }
        )
