"""
Experiment configuration and output records.
"""

from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import Field, field_validator, model_validator

from .attack import AttackConfig, AttackerView
from .base import BaseModel, CsvRecord
from .cache import CacheConfig
from .cpu import PredictorConfig, Serializer, SpeculationConfig
from .dram import DramConfig, DramGeometry, FlipTemplate, TimingModel, parse_template_cells
from .gadget import CalibrationConfig, GadgetConfig


def parse_int_list(value: Any) -> Any:
    """
    Parse ``"0,100,200"`` or an inclusive range ``"start:stop:step"``.
    """
    if not isinstance(value, str):
        return value
    text = value.strip()
    if not text:
        return []
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ValueError(f"range '{text}' must be start:stop or start:stop:step")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        if step <= 0:
            raise ValueError("range step must be positive")
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


class ExperimentSettings(BaseModel):
    """Knobs of the measurement commands."""

    trials: int = Field(1000, ge=0)
    series: List[Serializer] = []
    fig3a_paddings: List[int] = Field(default_factory=lambda: list(range(0, 801, 20)))
    fig3a_budget_seconds: float = Field(7200.0, gt=0)
    fig3b_samples: int = Field(10000, ge=0)
    fig3b_bin_width: int = Field(10, ge=1)
    fig3b_jitter: bool = True
    band_low: int = 1200
    band_high: int = 1400
    cpu_hz: float = Field(2.6e9, gt=0)
    workers: int = Field(4, ge=1)

    @field_validator("fig3a_paddings", mode="before")
    @classmethod
    def _paddings(cls, value: Any) -> Any:
        return parse_int_list(value)

    @field_validator("series", mode="before")
    @classmethod
    def _series(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value

    @property
    def band(self) -> Tuple[int, int]:
        return (self.band_low, self.band_high)

    def seconds_to_cycles(self, seconds: float) -> int:
        return int(round(seconds * self.cpu_hz))


class ExperimentConfig(BaseModel):
    """Everything that determines a run; identical config and seed give identical outputs."""

    seed: int = Field(0, ge=0)
    output_dir: str = "out"
    geometry: DramGeometry = Field(default_factory=DramGeometry)
    timing: TimingModel = Field(default_factory=TimingModel)
    dram: DramConfig = Field(default_factory=DramConfig)
    cache: CacheConfig = Field(default_factory=CacheConfig)
    predictor: PredictorConfig = Field(default_factory=PredictorConfig)
    speculation: SpeculationConfig = Field(default_factory=SpeculationConfig)
    template: FlipTemplate = Field(default_factory=FlipTemplate)
    gadget: GadgetConfig = Field(default_factory=GadgetConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    attack: AttackConfig = Field(default_factory=AttackConfig)
    attacker: AttackerView = Field(default_factory=AttackerView)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)

    @field_validator("template", mode="before")
    @classmethod
    def _template(cls, value: Any) -> Any:
        if isinstance(value, dict) and isinstance(value.get("cells"), str):
            return {**value, "cells": parse_template_cells(value["cells"])}
        return value

    @model_validator(mode="after")
    def _cells_inside_geometry(self) -> "ExperimentConfig":
        g = self.geometry
        bounds = (
            ("channel", g.channels),
            ("dimm", g.dimms_per_channel),
            ("rank", g.ranks),
            ("bank", g.banks_per_rank),
            ("row", g.rows_per_bank),
            ("col", g.cols_per_row),
        )
        for cell in self.template.cells:
            for name, bound in bounds:
                if getattr(cell.victim, name) >= bound:
                    raise ValueError(
                        f"template cell {cell.victim.row_key} has {name} outside the geometry"
                    )
        return self

    @property
    def base_window(self) -> int:
        value = self.speculation.base_window
        return self.timing.rowbuf_miss if value is None else value

    @property
    def backlog_accrual(self) -> int:
        value = self.speculation.backlog_accrual
        return self.timing.rowbuf_miss if value is None else value


class Fig2Row(CsvRecord):
    trial: int
    drain_on: bool
    success: bool
    series: Optional[str] = None

    @classmethod
    def csv_header(cls, with_series: bool = False) -> List[str]:
        header = ["trial", "drain_on", "success"]
        return header + ["series"] if with_series else header

    def csv_row(self, with_series: bool = False) -> List[object]:
        row: List[object] = [self.trial, int(self.drain_on), int(self.success)]
        return row + [self.series] if with_series else row


class Fig3aRow(CsvRecord):
    padding: int
    per_hammer_cost: int
    time_to_first_flip_cycles: Optional[int] = None
    time_to_first_flip_seconds: Optional[float] = None

    @classmethod
    def csv_header(cls) -> List[str]:
        return ["padding", "per_hammer_cost", "time_to_first_flip_cycles", "time_to_first_flip_seconds"]

    def csv_row(self) -> List[object]:
        if self.time_to_first_flip_cycles is None:
            return [self.padding, self.per_hammer_cost, "none", "none"]
        return [
            self.padding,
            self.per_hammer_cost,
            self.time_to_first_flip_cycles,
            f"{self.time_to_first_flip_seconds:.6f}",
        ]


class HistogramBin(CsvRecord):
    bin_low: int
    bin_high: int
    count: int

    @classmethod
    def csv_header(cls) -> List[str]:
        return ["bin_low", "bin_high", "count"]

    def csv_row(self) -> List[object]:
        return [self.bin_low, self.bin_high, self.count]


class CostSummary(BaseModel):
    n: int
    min: Optional[int] = None
    max: Optional[int] = None
    mean: Optional[float] = None
    fraction_in_band: Optional[float] = None
    band: Tuple[int, int]


class ExperimentRecord(BaseModel):
    """Rows of one experiment plus its summary statistics."""

    experiment: str
    header: List[str]
    rows: List[List[Union[int, float, str, None]]] = []
    summary: Dict[str, Any] = {}
