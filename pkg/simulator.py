"""
Main simulator class for simhammer.
"""

import logging
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from .exceptions import InvalidConfigurationError
from .models.experiments import ExperimentConfig
from .models.gadget import CalibrationReport
from .resources.address_space import AddressSpaceResource
from .resources.attack import AttackResource
from .resources.cache import CacheResource
from .resources.cpu import CpuResource
from .resources.dram import DramResource
from .resources.experiments import ExperimentsResource
from .resources.gadget import GadgetResource

logger = logging.getLogger(__name__)


class Simulator:
    """
    One simulated machine: DRAM, cache, core, victim process and attacker.

    The simulator owns the virtual clock. Every resource reaches the rest of
    the machine through it, so two simulators never share state and may run
    on different threads.

    Args:
        config: An ExperimentConfig or a mapping validated into one (default: defaults)
        seed: Overrides ``config.seed`` when given

    Example:
        >>> sim = Simulator(load_config(preset="desk"))
        >>> sim.gadget.calibrate()
        >>> report = sim.attack.full_attack()
        >>> report.success
        True
    """

    def __init__(
        self,
        config: Optional[Union[ExperimentConfig, Dict[str, Any]]] = None,
        seed: Optional[int] = None,
    ):
        self.config = self._validate(config, seed)
        self.rng = np.random.default_rng(self.config.seed)
        self._now = 0
        self.calibration: Optional[CalibrationReport] = None

        if not self.config.timing.separates(self.config.gadget.threshold):
            logger.warning(
                "gadget threshold %d does not separate cache hits (%d) from DRAM accesses (%d)",
                self.config.gadget.threshold,
                self.config.timing.cache_hit,
                self.config.timing.rowbuf_hit,
            )

        # Order matters: later resources read earlier ones at construction.
        self.dram = DramResource(self)
        self.cache = CacheResource(self)
        self.address_space = AddressSpaceResource(self)
        self.cpu = CpuResource(self)
        self.gadget = GadgetResource(self)
        self.attack = AttackResource(self)
        self.experiments = ExperimentsResource(self)

    @staticmethod
    def _validate(config, seed: Optional[int]) -> ExperimentConfig:
        try:
            if config is None:
                config = ExperimentConfig()
            elif not isinstance(config, ExperimentConfig):
                config = ExperimentConfig.model_validate(config)
            if seed is not None and seed != config.seed:
                config = ExperimentConfig.model_validate({**config.model_dump(), "seed": seed})
        except ValidationError as e:
            raise InvalidConfigurationError(
                f"invalid configuration: {e.error_count()} error(s)",
                details={"errors": e.errors(include_url=False)},
            ) from e
        return config

    # Virtual clock

    @property
    def now(self) -> int:
        return self._now

    def advance(self, cycles: int) -> int:
        if cycles < 0:
            raise ValueError("the clock cannot run backwards")
        self._now += cycles
        return self._now

    def idle_until_refresh(self, slack: int = 0) -> int:
        """
        Sleep until the next refresh boundary.

        A no-op when no row was activated in the current window and the
        window began at most ``slack`` cycles ago.
        """
        self.dram.refresh_tick(self._now)
        fresh = self._now - self.dram.last_bulk_refresh <= slack
        if not fresh or self.dram.disturbance_state().rows:
            self._now = self.dram.next_refresh_boundary(self._now)
            self.dram.refresh_tick(self._now)
        return self._now

    def sample_jitter(self) -> int:
        jitter = self.config.timing.jitter
        return int(self.rng.integers(jitter.low, jitter.high + 1))

    # Fast-forward support

    def counters(self) -> Tuple[int, ...]:
        return self.cpu.counters()

    def bump_counters(self, delta: Tuple[int, ...], times: int) -> None:
        self.cpu.bump_counters(delta, times)

    def state_key(self) -> Tuple:
        """Microarchitectural snapshot: cache sets, open rows, PHT and backlog."""
        return (self.cache.state_key(), self.dram.state_key(), self.cpu.state_key())

    # Lifecycle

    def fresh(self) -> "Simulator":
        """A new machine built from the same configuration and seed."""
        return Simulator(self.config)

    def close(self) -> None:
        self.cache.trace_events.clear()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
