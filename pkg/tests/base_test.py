"""
Shared helpers for the simhammer test suites.

Most tests run on the ``desk`` preset: 2 banks of 64 rows with 1 KB rows,
a 64-set 4-way cache and a 1.5M-cycle refresh window.
"""

from typing import Any, Dict, Optional

from ..config import load_config
from ..models.attack import HammerPair
from ..models.dram import DramAddress
from ..models.experiments import ExperimentConfig
from ..simulator import Simulator

DESK_WINDOW = 1_500_000
# Calibrated values under default timing.
TRAIN_K = 4
DRAIN_LEN = 280
HYBRID_ROUND = 1305
DIRECT_ROUND = 860

# Calibrations skipped, short trial counts.
QUICK = {
    "attack.train_k": TRAIN_K,
    "attack.drain_len": DRAIN_LEN,
    "calibration.trials": 20,
}


def make_config(overrides: Optional[Dict[str, Any]] = None, preset: str = "desk", seed: int = 0) -> ExperimentConfig:
    items = [f"{key}={value}" for key, value in (overrides or {}).items()]
    return load_config(preset=preset, overrides=items, seed=seed, env={})


def make_sim(overrides: Optional[Dict[str, Any]] = None, preset: str = "desk", seed: int = 0) -> Simulator:
    return Simulator(make_config(overrides, preset=preset, seed=seed))


def quick_sim(overrides: Optional[Dict[str, Any]] = None, preset: str = "desk") -> Simulator:
    return make_sim({**QUICK, **(overrides or {})}, preset=preset)


def row_address(sim: Simulator, bank: int, row: int, col: int = 0) -> int:
    return sim.dram.physical_of(DramAddress(bank=bank, row=row, col=col))


def desk_pair(sim: Simulator, bank: int = 0, row_a: int = 10, row_b: int = 12) -> HammerPair:
    """A double-sided pair on the identity mapping, with its DRAM hints."""
    dram_a = DramAddress(bank=bank, row=row_a)
    dram_b = DramAddress(bank=bank, row=row_b)
    return HammerPair(
        addr_a=sim.dram.physical_of(dram_a),
        addr_b=sim.dram.physical_of(dram_b),
        dram_a=dram_a,
        dram_b=dram_b,
    )
