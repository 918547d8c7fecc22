"""
Resource modules for simhammer.

Each resource models one part of the simulated machine or drives one
stage of the attack on top of it.
"""

from .base import BaseResource
from .dram import DramResource
from .cache import CacheResource
from .address_space import AddressSpaceResource
from .cpu import CpuResource
from .gadget import GadgetResource
from .hammer_loop import HammerLoop, HammerOutcome
from .attack import AttackResource
from .experiments import ExperimentsResource
from .trial_executor import TrialExecutor

__all__ = [
    "BaseResource",
    "DramResource",
    "CacheResource",
    "AddressSpaceResource",
    "CpuResource",
    "GadgetResource",
    "HammerLoop",
    "HammerOutcome",
    "AttackResource",
    "ExperimentsResource",
    "TrialExecutor",
]
