"""
Experiments resource: calibration report, measurement commands, scan and attack.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from ..models.cpu import Serializer
from ..models.experiments import (
    CostSummary,
    ExperimentRecord,
    Fig2Row,
    Fig3aRow,
    HistogramBin,
)
from ..models.attack import ScanHit
from ..models.dram import DramAddress, FlipEvent
from ..models.gadget import CalibrationReport
from .base import BaseResource
from .trial_executor import TrialExecutor

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def summarize_costs(costs: Sequence[int], band: tuple) -> CostSummary:
    """min/max/mean and the fraction of costs inside the inclusive band."""
    if not len(costs):
        return CostSummary(n=0, band=band)
    values = np.asarray(costs, dtype=np.int64)
    in_band = np.count_nonzero((values >= band[0]) & (values <= band[1]))
    return CostSummary(
        n=int(values.size),
        min=int(values.min()),
        max=int(values.max()),
        mean=round(float(values.mean()), 6),
        fraction_in_band=round(in_band / values.size, 6),
        band=band,
    )


def cost_histogram(costs: Sequence[int], bin_width: int) -> List[HistogramBin]:
    """Histogram with edges aligned to multiples of ``bin_width``."""
    if not len(costs):
        return []
    values = np.asarray(costs, dtype=np.int64)
    low = int(values.min()) // bin_width * bin_width
    high = int(values.max()) // bin_width * bin_width + bin_width
    edges = np.arange(low, high + bin_width, bin_width)
    counts, _ = np.histogram(values, bins=edges)
    return [
        HistogramBin(bin_low=int(edges[i]), bin_high=int(edges[i + 1]), count=int(count))
        for i, count in enumerate(counts)
    ]


class ExperimentsResource(BaseResource):
    """
    Commands behind the CLI.

    Every command returns an ExperimentRecord and, when ``out_dir`` is
    given, writes its CSV/JSON files there. Outputs depend only on the
    configuration and seed.
    """

    @property
    def _settings(self):
        return self._config.experiment

    def _calibration(self) -> CalibrationReport:
        attack = self._config.attack
        if attack.train_k is not None and attack.drain_len is not None:
            return CalibrationReport(
                min_training=attack.train_k,
                drain_len=attack.drain_len,
                round_cost=self._sim.gadget.measure_round_cost(attack.train_k, attack.drain_len, jitter=False),
            )
        if self._sim.calibration is None:
            self._sim.gadget.calibrate()
        return self._sim.calibration

    def _sample_round_costs(self, calibration: CalibrationReport, samples: int, jitter: bool) -> List[int]:
        gadget = self._sim.gadget
        return [
            gadget.measure_round_cost(calibration.min_training, calibration.drain_len, jitter=jitter)
            for _ in range(samples)
        ]

    def cmd_calibrate(self, out_dir: Optional[PathLike] = None) -> ExperimentRecord:
        """Run both calibrations; writes ``calibrate.json``."""
        calibration = self._calibration()
        costs = self._sample_round_costs(
            calibration, self._settings.trials, self._timing.jitter.enabled
        )
        summary = {
            "min_training": calibration.min_training,
            "drain_len": calibration.drain_len,
            "round_cost": calibration.round_cost,
            "round_cost_stats": summarize_costs(costs, self._settings.band).model_dump(mode="json"),
        }
        if out_dir is not None:
            write_json(Path(out_dir) / "calibrate.json", summary)
        logger.info("calibration: min_training=%d drain_len=%d", calibration.min_training, calibration.drain_len)
        return ExperimentRecord(experiment="calibrate", header=[], summary=summary)

    # fig2

    def _fig2_series(self, label: str, serializer: str, drain_len: int, train_k: int, trials: int) -> List[Fig2Row]:
        sim = self._sim.fresh()
        rows = []
        for trial in range(trials):
            result = sim.gadget.verify_round(train_k, drain_len, serializer=serializer)
            rows.append(
                Fig2Row(trial=trial, drain_on=serializer == Serializer.DRAIN.value, success=result.success, series=label)
            )
        return rows

    def cmd_fig2(self, trials: Optional[int] = None, out_dir: Optional[PathLike] = None) -> ExperimentRecord:
        """
        Verification rounds without and with the calibrated drain loop.

        Extra serializer series (fence, syscall) add a ``series`` column.
        """
        trials = self._settings.trials if trials is None else trials
        calibration = self._calibration()
        extra = [s for s in self._settings.series if s not in (Serializer.DRAIN.value, Serializer.NONE.value)]
        with_series = bool(extra)

        rows = self._fig2_series(Serializer.NONE.value, Serializer.NONE.value, 0, calibration.min_training, trials)
        rows += self._fig2_series(
            Serializer.DRAIN.value, Serializer.DRAIN.value, calibration.drain_len, calibration.min_training, trials
        )
        for serializer in extra:
            rows += self._fig2_series(serializer, serializer, 0, calibration.min_training, trials)

        summary = {}
        for row in rows:
            summary.setdefault(row.series, 0)
            summary[row.series] += int(row.success)
        header = Fig2Row.csv_header(with_series)
        table = [row.csv_row(with_series) for row in rows]
        if out_dir is not None:
            write_csv(Path(out_dir) / "fig2.csv", header, table)
        logger.info("fig2 successes per series: %s", summary)
        return ExperimentRecord(experiment="fig2", header=header, rows=table, summary={"successes": summary})

    # fig3a

    def _fig3a_victim(self):
        cells = self._config.template.cells
        if cells:
            return cells[0].victim, cells[0].threshold
        return DramAddress(row=2), None

    def _flip_impossible(self, cost: int, threshold: Optional[int]) -> bool:
        if threshold is None or cost <= 0:
            return threshold is None
        whole_rounds = self._sim.dram.refresh_interval // cost
        return 2 * whole_rounds < self._config.dram.threshold_sides * threshold

    def _fig3a_trial(self, padding: int) -> Fig3aRow:
        victim, threshold = self._fig3a_victim()
        cost = self._sim.attack.direct_round_cost(padding)
        row = Fig3aRow(padding=padding, per_hammer_cost=cost)
        if self._flip_impossible(cost, threshold):
            return row
        sim = self._sim.fresh()
        with sim.address_space.calibration_mode():
            pair = sim.attack.pair_around(victim)
        budget = self._settings.seconds_to_cycles(self._settings.fig3a_budget_seconds)
        report = sim.attack.direct_hammer(pair, budget, padding=padding)
        cycles = report.time_to_first_flip
        if cycles is None:
            return row
        row.time_to_first_flip_cycles = cycles
        row.time_to_first_flip_seconds = cycles / self._settings.cpu_hz
        return row

    def cmd_fig3a(self, paddings: Optional[List[int]] = None, out_dir: Optional[PathLike] = None) -> ExperimentRecord:
        """
        Time to first flip of direct double-sided hammering per padding.

        Paddings whose round cost cannot reach the flip threshold within a
        refresh window are answered analytically.
        """
        paddings = self._settings.fig3a_paddings if paddings is None else paddings
        with TrialExecutor(max_workers=self._settings.workers) as executor:
            results = executor.map_ordered(self._fig3a_trial, sorted(paddings))
        for result in results:
            if isinstance(result, Exception):
                raise result
        header = Fig3aRow.csv_header()
        table = [row.csv_row() for row in results]
        flipping = [row.per_hammer_cost for row in results if row.time_to_first_flip_cycles is not None]
        summary = {"max_flipping_cost": max(flipping) if flipping else None}
        if out_dir is not None:
            write_csv(Path(out_dir) / "fig3a.csv", header, table)
        logger.info("fig3a: %d paddings, highest flipping cost %s", len(results), summary["max_flipping_cost"])
        return ExperimentRecord(experiment="fig3a", header=header, rows=table, summary=summary)

    # fig3b

    def cmd_fig3b(self, samples: Optional[int] = None, out_dir: Optional[PathLike] = None) -> ExperimentRecord:
        """Histogram of sampled speculative round costs."""
        samples = self._settings.fig3b_samples if samples is None else samples
        calibration = self._calibration()
        costs = self._sample_round_costs(calibration, samples, self._settings.fig3b_jitter)
        bins = cost_histogram(costs, self._settings.fig3b_bin_width)
        summary = summarize_costs(costs, self._settings.band).model_dump(mode="json")
        header = HistogramBin.csv_header()
        table = [b.csv_row() for b in bins]
        if out_dir is not None:
            write_csv(Path(out_dir) / "fig3b.csv", header, table)
            write_json(Path(out_dir) / "fig3b_summary.json", summary)
        logger.info("fig3b: %d samples, max %s", samples, summary["max"])
        return ExperimentRecord(experiment="fig3b", header=header, rows=table, summary=summary)

    # Pipeline commands

    def cmd_scan(self, out_dir: Optional[PathLike] = None) -> ExperimentRecord:
        """Scan the configured region; writes ``pairs.csv``."""
        result = self._sim.attack.scan_vulnerable_pairs()
        header = ScanHit.csv_header()
        table = [hit.csv_row() for hit in result.hits]
        if out_dir is not None:
            write_csv(Path(out_dir) / "pairs.csv", header, table)
        summary = {
            "pairs_tested": result.pairs_tested,
            "hits": len(result.hits),
            "partial": result.partial,
            "virtual_time": result.virtual_time,
        }
        return ExperimentRecord(experiment="scan", header=header, rows=table, summary=summary)

    def cmd_attack(self, out_dir: Optional[PathLike] = None) -> ExperimentRecord:
        """Run the full pipeline; writes ``attack.json`` and ``flips.csv``."""
        report = self._sim.attack.full_attack()
        payload = report.model_dump(mode="json", exclude={"wall_time"})
        header = FlipEvent.csv_header()
        table = [flip.csv_row() for flip in report.flips]
        if out_dir is not None:
            write_json(Path(out_dir) / "attack.json", payload)
            write_csv(Path(out_dir) / "flips.csv", header, table)
        if report.no_target:
            logger.info("attack: no vulnerable pair found")
        else:
            logger.info("attack: success=%s after %d rounds", report.success, report.iterations)
        return ExperimentRecord(
            experiment="attack",
            header=header,
            rows=table,
            summary={**payload, "wall_time": report.wall_time},
        )
