"""
Base resource class for the simhammer simulator.
"""

from typing import TYPE_CHECKING

from ..models.dram import TimingModel
from ..models.experiments import ExperimentConfig

if TYPE_CHECKING:
    from ..simulator import Simulator


class BaseResource:
    """
    Base class for all simulator resources.

    Resources hold their own state and reach the rest of the machine
    through the owning simulator.
    """

    def __init__(self, sim: "Simulator"):
        self._sim = sim

    @property
    def _config(self) -> ExperimentConfig:
        return self._sim.config

    @property
    def _timing(self) -> TimingModel:
        return self._sim.config.timing
