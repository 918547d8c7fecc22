"""
Periodic hammer-round engine with steady-state fast-forward.
"""

import logging
from typing import Callable, List, Optional

from ..models.base import BaseModel
from ..models.dram import FlipEvent

logger = logging.getLogger(__name__)


class HammerOutcome(BaseModel):
    iterations: int = 0
    elapsed: int = 0
    flips: List[FlipEvent] = []
    last_round_cost: Optional[int] = None
    skipped_rounds: int = 0


class HammerLoop:
    """
    Repeat a round function until a flip, the budget or ``max_rounds``.

    A round starts only while the elapsed virtual time is below the budget.
    Once two consecutive rounds leave the machine in the same state with
    the same cost, activation delta and counter delta, every following
    round is identical until a refresh boundary or a flip threshold is
    crossed, so whole rounds are applied arithmetically up to that point.
    Activations of a round reach the DRAM counters when the round ends.

    Args:
        sim: Simulator the round function drives
        round_fn: Callable executing one round
        budget_cycles: Virtual-time budget
        max_rounds: Optional cap on rounds
        stop_on_flip: Stop after the first round that flips a bit
        fast_forward: Allow arithmetic skipping (ignored when jitter is on)
    """

    def __init__(
        self,
        sim,
        round_fn: Callable[[], None],
        budget_cycles: int,
        max_rounds: Optional[int] = None,
        stop_on_flip: bool = True,
        fast_forward: bool = True,
    ):
        self._sim = sim
        self._round = round_fn
        self.budget_cycles = budget_cycles
        self.max_rounds = max_rounds
        self.stop_on_flip = stop_on_flip
        self.fast_forward = (
            fast_forward
            and not sim.config.timing.jitter.enabled
            and not sim.config.cache.trace
        )

    def run(self) -> HammerOutcome:
        sim = self._sim
        dram = sim.dram
        start = sim.now
        outcome = HammerOutcome()
        previous = None

        while True:
            if sim.now - start >= self.budget_cycles:
                break
            if self.max_rounds is not None and outcome.iterations >= self.max_rounds:
                break

            counters_before = sim.counters()
            flips_before = len(dram.flip_events)
            round_start = sim.now
            dram.begin_round(round_start)
            self._round()
            delta = dram.end_round()
            cost = sim.now - round_start
            outcome.iterations += 1
            outcome.last_round_cost = cost

            new_flips = dram.flip_events[flips_before:]
            if new_flips:
                outcome.flips.extend(new_flips)
                previous = None
                if self.stop_on_flip:
                    break
                continue
            if not self.fast_forward:
                continue

            counters_delta = tuple(a - b for a, b in zip(sim.counters(), counters_before))
            signature = (cost, tuple(sorted(delta.items())), counters_delta, sim.state_key())
            if signature == previous and cost > 0:
                skip = self._skippable(cost, delta, start, outcome.iterations)
                if skip > 0:
                    dram.apply_bulk_activations(delta, skip)
                    sim.bump_counters(counters_delta, skip)
                    sim.advance(skip * cost)
                    outcome.iterations += skip
                    outcome.skipped_rounds += skip
                    logger.debug("fast-forwarded %d rounds of %d cycles", skip, cost)
            previous = signature

        outcome.elapsed = sim.now - start
        return outcome

    def _skippable(self, cost: int, delta, start: int, iterations: int) -> int:
        sim = self._sim
        dram = sim.dram
        now = sim.now
        # Every skipped round, and the round after them, must start inside the budget.
        skip = (self.budget_cycles - (now - start) - 1) // cost
        if self.max_rounds is not None:
            skip = min(skip, self.max_rounds - iterations)
        if now - dram.last_bulk_refresh >= dram.refresh_interval:
            return 0
        skip = min(skip, (dram.next_refresh_boundary(now) - now) // cost - 1)
        threshold_limit = dram.rounds_until_threshold(delta)
        if threshold_limit is not None:
            skip = min(skip, threshold_limit)
        return max(0, skip)
