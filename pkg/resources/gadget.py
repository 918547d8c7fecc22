"""
Gadget resource: the bounds-checked victim function, verification rounds and calibrations.
"""

import logging
from typing import Optional

from ..exceptions import AddressError, CalibrationError, MisuseError
from ..models.cpu import BranchOutcome, Serializer
from ..models.gadget import CalibrationReport, RoundResult, VictimArray, VictimCall
from .base import BaseResource

logger = logging.getLogger(__name__)


class GadgetResource(BaseResource):
    """
    The victim ``if (index < array_size) access(victim_array + index)``
    and the procedures that tune an attack round around it.
    """

    def __init__(self, sim):
        super().__init__(sim)
        settings = self._config.gadget
        self.settings = settings
        self.victim = VictimArray(
            base=settings.victim_base,
            array_size=settings.array_size,
            array_size_location=settings.array_size_location,
            line_size=self._config.cache.line_size,
        )

    @property
    def branch_id(self) -> str:
        return self.settings.branch_id

    def victim_function(self, index: int) -> VictimCall:
        """
        Invoke the victim once and advance the clock by its cost.

        In bounds and predicted taken, the element load overlaps the guard
        operand. Out of bounds and predicted taken, the guard resolves when
        the speculation window closes, and the transient element load runs
        only if it fits into the effective window.
        """
        sim = self._sim
        cpu = sim.cpu
        t = self._timing
        now = sim.now
        op_pa = sim.address_space.translate(self.victim.array_size_location)
        op_latency, _ = sim.cache.cached_access(op_pa, now)
        predicted_taken = cpu.predict(self.branch_id) == BranchOutcome.TAKEN
        in_bounds = self.victim.in_bounds(index)
        executed = False

        if in_bounds:
            element_pa = sim.address_space.translate(self.victim.address_of(index))
            if predicted_taken:
                element_latency, _ = sim.cache.cached_access(element_pa, now)
                cost = max(op_latency, element_latency) + t.alu_op
            else:
                element_latency, _ = sim.cache.cached_access(element_pa, now + op_latency)
                cost = op_latency + element_latency + t.alu_op
            cpu.write_register("rax", sim.dram.read_word(element_pa))
            cpu.update(self.branch_id, BranchOutcome.TAKEN)
        else:
            if predicted_taken:
                cpu.record_mispredict()
                executed = self._transient_access(self.victim.address_of(index))
                cost = cpu.speculation.base_window + t.alu_op
            else:
                cost = op_latency + t.alu_op
            cpu.update(self.branch_id, BranchOutcome.NOT_TAKEN)
            cpu.resolve()

        sim.advance(cost)
        return VictimCall(
            index=index,
            in_bounds=in_bounds,
            predicted_taken=predicted_taken,
            transient_executed=executed,
            cost=cost,
        )

    def _transient_access(self, va: int) -> bool:
        sim = self._sim
        try:
            pa = sim.address_space.translate(va)
            latency = sim.cache.peek_latency(pa)
        except AddressError:
            # Unbacked addresses fault; a squashed fault leaves no trace.
            return False
        return sim.cpu.speculate(sim.cpu.speculation, latency, pa)

    def prime(self, calls: Optional[int] = None) -> int:
        """Warm the victim: saturate the counter and cache operand and elements."""
        start = self._sim.now
        calls = (1 << self._config.predictor.counter_bits) if calls is None else calls
        for i in range(calls):
            self.victim_function(i % self.victim.array_size)
        return self._sim.now - start

    def _check_target(self, vul_addr: int) -> int:
        index = self.victim.index_of(vul_addr)
        if self.victim.in_bounds(index):
            raise MisuseError(
                f"target {vul_addr:#x} lies inside the victim array",
                details={"vul_addr": vul_addr, "base": self.victim.base},
            )
        line = self._config.cache.line_size
        if vul_addr // line == self.victim.array_size_location // line:
            raise MisuseError(
                f"target {vul_addr:#x} shares a cache line with array_size",
                details={"vul_addr": vul_addr},
            )
        return index

    def _serialize(self, serializer: str, drain_len: int) -> None:
        cpu = self._sim.cpu
        if serializer == Serializer.DRAIN.value:
            cpu.drain(drain_len)
        elif serializer == Serializer.FENCE.value:
            cpu.fence_op()
        elif serializer == Serializer.SYSCALL.value:
            cpu.syscall_op()

    def verify_round(
        self,
        train_k: int,
        drain_len: int,
        vul_addr: Optional[int] = None,
        serializer: Optional[str] = None,
        flush_vul: bool = True,
    ) -> RoundResult:
        """
        Verify one speculative DRAM access.

        Flush array_size and the target, mistrain with ``train_k`` valid
        indexes, serialize, invoke with the out-of-bounds index and time a
        plain load of the target.

        Raises:
            MisuseError: If the target lies inside the victim array
        """
        sim = self._sim
        cpu = sim.cpu
        vul_addr = self.settings.vul_addr if vul_addr is None else vul_addr
        serializer = serializer or self.settings.serializer
        index = self._check_target(vul_addr)

        start = sim.now
        mispredicts_before = cpu.pmc_read().mispredicted_taken_conditional
        cpu.enter_round()
        cpu.clflush_virtual(self.victim.array_size_location)
        if flush_vul:
            cpu.clflush_virtual(vul_addr)
        for i in range(train_k):
            self.victim_function(i % self.victim.array_size)
        self._serialize(serializer, drain_len)
        call = self.victim_function(index)
        reload = cpu.load_virtual(vul_addr)
        return RoundResult(
            success=reload < self.settings.threshold,
            probe_latency=reload,
            round_cost=sim.now - start,
            mispredict_count_delta=cpu.pmc_read().mispredicted_taken_conditional - mispredicts_before,
            executed=call.transient_executed,
        )

    # Calibration

    def _every_round_mispredicts(self, train_k: int) -> bool:
        sim = self._sim.fresh()
        for _ in range(self._config.calibration.trials):
            if sim.gadget.verify_round(train_k, 0).mispredict_count_delta != 1:
                return False
        return True

    def calibrate_min_training(self) -> int:
        """
        Smallest training count that still mispredicts on every malicious call.

        Starts from the PMC baseline (5 trainings, doubled while it does not
        mispredict every round) and decrements while the event count holds.
        """
        settings = self._config.calibration
        baseline = settings.baseline_training
        while not self._every_round_mispredicts(baseline):
            if baseline >= settings.max_training:
                raise CalibrationError(
                    f"no training count up to {settings.max_training} mispredicts reliably",
                    details={"max_training": settings.max_training},
                )
            baseline = min(max(1, baseline * 2), settings.max_training)
        count = baseline
        while count > 0 and self._every_round_mispredicts(count - 1):
            count -= 1
        logger.info("minimal training count: %d (baseline %d)", count, baseline)
        return count

    def _drain_verifies(self, train_k: int, drain_len: int) -> bool:
        sim = self._sim.fresh()
        return all(
            sim.gadget.verify_round(train_k, drain_len, serializer=Serializer.DRAIN.value).success
            for _ in range(self._config.calibration.trials)
        )

    def calibrate_drain_loop(self, train_k: Optional[int] = None, max_drain: Optional[int] = None) -> int:
        """
        Shortest drain loop for which every verification round succeeds.

        Raises:
            CalibrationError: If even ``max_drain`` does not verify
        """
        if train_k is None:
            train_k = self._config.attack.train_k
        if train_k is None:
            train_k = self.calibrate_min_training()
        high = self._config.calibration.max_drain if max_drain is None else max_drain
        if not self._drain_verifies(train_k, high):
            raise CalibrationError(
                f"no drain length up to {high} verifies a speculative DRAM access",
                details={
                    "max_drain": high,
                    "train_k": train_k,
                    "backlog_accrual": self._config.backlog_accrual,
                    "base_window": self._config.base_window,
                },
            )
        low = 0
        while low < high:
            middle = (low + high) // 2
            if self._drain_verifies(train_k, middle):
                high = middle
            else:
                low = middle + 1
        logger.info("minimal drain length: %d", low)
        return low

    def measure_round_cost(
        self,
        train_k: int,
        drain_len: int,
        padding: int = 0,
        hybrid: bool = True,
        jitter: Optional[bool] = None,
    ) -> int:
        """
        Cost of one speculative hammering round.

        Two flushes, ``train_k`` victim calls with cached operands, the drain
        loop, the malicious call and the final load (a DRAM access to the
        directly hammered address when ``hybrid``, a cache hit otherwise).
        """
        t = self._timing
        cost = (
            2 * t.clflush_cost
            + train_k * (t.cache_hit + t.alu_op)
            + drain_len * t.alu_op
            + self._config.base_window
            + t.alu_op
            + (t.rowbuf_miss if hybrid else t.cache_hit)
            + padding * t.alu_op
        )
        if t.jitter.enabled if jitter is None else jitter:
            cost += self._sim.sample_jitter()
        return cost

    def calibrate(self) -> CalibrationReport:
        """Run both calibrations and remember the result on the simulator."""
        min_training = self.calibrate_min_training()
        drain_len = self.calibrate_drain_loop(min_training)
        report = CalibrationReport(
            min_training=min_training,
            drain_len=drain_len,
            round_cost=self.measure_round_cost(min_training, drain_len, jitter=False),
        )
        self._sim.calibration = report
        return report
