"""
CPU resource: instruction-level timing, PHT predictor, speculation window and PMC.
"""

from typing import Dict, Optional, Tuple

from ..models.cpu import BranchOutcome, PmcState, SpeculationContext
from .base import BaseResource


class CpuResource(BaseResource):
    """
    A scalar core driving the virtual clock.

    Conditional branches are predicted by a table of k-bit saturating
    counters (predict taken iff the counter is at least ``2**(k-1)``).
    Speculation is modelled by a window: a transient load executes only if
    its latency fits into ``base_window - pending_resolution``, where the
    backlog grows by ``backlog_accrual`` at the start of every attack round.
    """

    def __init__(self, sim):
        super().__init__(sim)
        self.predictor = self._config.predictor
        self.speculation_settings = self._config.speculation
        self.pht: Dict[str, int] = {}
        self.speculation = SpeculationContext(base_window=self._config.base_window)
        self.registers: Dict[str, int] = {}
        self.transient_loads = 0
        self.squashed_loads = 0
        self._mispredicted_taken = 0
        self._cycle_base = 0

    # Instructions

    def load(self, pa: int) -> int:
        """Timed load of a physical address; advances the clock by its latency."""
        latency, _ = self._sim.cache.cached_access(pa, self._sim.now)
        self._sim.advance(latency)
        return latency

    def load_virtual(self, va: int) -> int:
        return self.load(self._sim.address_space.translate(va))

    def clflush(self, pa: int) -> int:
        cost = self._sim.cache.flush(pa)
        self._sim.advance(cost)
        return cost

    def clflush_virtual(self, va: int) -> int:
        return self.clflush(self._sim.address_space.translate(va))

    def nops(self, count: int) -> None:
        self._sim.advance(count * self._timing.alu_op)

    def write_register(self, name: str, value: int) -> None:
        self.registers[name] = value

    def architectural_state(self) -> Dict[str, int]:
        return dict(self.registers)

    # Branch prediction

    def predict(self, branch_id: str) -> BranchOutcome:
        counter = self.pht.get(branch_id, self.predictor.initial_counter)
        if counter >= self.predictor.taken_threshold:
            return BranchOutcome.TAKEN
        return BranchOutcome.NOT_TAKEN

    def update(self, branch_id: str, outcome: BranchOutcome) -> None:
        counter = self.pht.get(branch_id, self.predictor.initial_counter)
        if outcome == BranchOutcome.TAKEN:
            counter = min(self.predictor.counter_max, counter + 1)
        else:
            counter = max(0, counter - 1)
        self.pht[branch_id] = counter

    def counter(self, branch_id: str) -> int:
        return self.pht.get(branch_id, self.predictor.initial_counter)

    # Speculation

    def speculate(
        self,
        ctx: SpeculationContext,
        transient_load_latency: int,
        transient_pa: Optional[int] = None,
    ) -> bool:
        """
        Run a transient load if it fits into the effective window.

        The load (when ``transient_pa`` is given) fills the cache and may
        activate a row, but never touches registers or memory contents.
        """
        executed = transient_load_latency <= ctx.effective_window
        if executed:
            self.transient_loads += 1
            if transient_pa is not None:
                self._sim.cache.cached_access(transient_pa, self._sim.now)
        else:
            self.squashed_loads += 1
        return executed

    def enter_round(self) -> None:
        """An outer branch stays unresolved: the backlog grows."""
        self.speculation.pending_resolution += self._config.backlog_accrual

    def resolve(self) -> None:
        self.speculation.pending_resolution = 0

    def drain(self, cycles: int) -> None:
        """A finite empty loop: retires ``cycles`` ALU ops and shrinks the backlog."""
        ctx = self.speculation
        ctx.pending_resolution = max(0, ctx.pending_resolution - cycles)
        self._sim.advance(cycles * self._timing.alu_op)

    def fence_op(self) -> int:
        settings = self.speculation_settings
        if settings.fence_drains:
            self.resolve()
        self._sim.advance(settings.fence_cost)
        return settings.fence_cost

    def syscall_op(self) -> int:
        cost = self.speculation_settings.syscall_cost
        self.resolve()
        self._sim.advance(cost)
        return cost

    # Performance counters

    def record_mispredict(self) -> None:
        self._mispredicted_taken += 1

    def pmc_read(self) -> PmcState:
        return PmcState(mispredicted_taken_conditional=self._mispredicted_taken, cycles=self._sim.now - self._cycle_base)

    def pmc_reset(self) -> None:
        self._mispredicted_taken = 0
        self._cycle_base = self._sim.now

    # Fast-forward support

    def counters(self) -> Tuple[int, int, int]:
        return (self._mispredicted_taken, self.transient_loads, self.squashed_loads)

    def bump_counters(self, delta: Tuple[int, int, int], times: int) -> None:
        self._mispredicted_taken += delta[0] * times
        self.transient_loads += delta[1] * times
        self.squashed_loads += delta[2] * times

    def state_key(self) -> Tuple:
        return (tuple(sorted(self.pht.items())), self.speculation.pending_resolution)
