"""
simhammer Models

Pydantic models for configuration, simulator state and experiment outputs.
"""

from .base import BaseModel, CsvRecord
from .dram import (
    DramGeometry,
    DramAddress,
    FlipDirection,
    FlipCell,
    FlipTemplate,
    FlipEvent,
    JitterSpec,
    TimingModel,
    DramConfig,
    RowActivation,
    DisturbanceState,
    RowBufferState,
    parse_template_cells,
)
from .cache import CacheConfig, CacheSetState, CacheEvent
from .cpu import BranchOutcome, Serializer, PredictorConfig, SpeculationConfig, SpeculationContext, PmcState
from .gadget import VictimArray, GadgetConfig, CalibrationConfig, VictimCall, RoundResult, CalibrationReport
from .attack import (
    MappingMode,
    HammerMode,
    FlushMode,
    AttackerView,
    AttackConfig,
    HammerPair,
    ScanHit,
    ScanResult,
    FlipReport,
)
from .experiments import (
    ExperimentSettings,
    ExperimentConfig,
    Fig2Row,
    Fig3aRow,
    HistogramBin,
    CostSummary,
    ExperimentRecord,
)

__all__ = [
    # Base
    "BaseModel",
    "CsvRecord",

    # DRAM
    "DramGeometry",
    "DramAddress",
    "FlipDirection",
    "FlipCell",
    "FlipTemplate",
    "FlipEvent",
    "JitterSpec",
    "TimingModel",
    "DramConfig",
    "RowActivation",
    "DisturbanceState",
    "RowBufferState",
    "parse_template_cells",

    # Cache
    "CacheConfig",
    "CacheSetState",
    "CacheEvent",

    # CPU
    "BranchOutcome",
    "Serializer",
    "PredictorConfig",
    "SpeculationConfig",
    "SpeculationContext",
    "PmcState",

    # Gadget
    "VictimArray",
    "GadgetConfig",
    "CalibrationConfig",
    "VictimCall",
    "RoundResult",
    "CalibrationReport",

    # Attack
    "MappingMode",
    "HammerMode",
    "FlushMode",
    "AttackerView",
    "AttackConfig",
    "HammerPair",
    "ScanHit",
    "ScanResult",
    "FlipReport",

    # Experiments
    "ExperimentSettings",
    "ExperimentConfig",
    "Fig2Row",
    "Fig3aRow",
    "HistogramBin",
    "CostSummary",
    "ExperimentRecord",
]
