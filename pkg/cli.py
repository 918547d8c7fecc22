"""
Command line interface for simhammer.

Usage:
    simhammer calibrate --preset desk --out out/
    simhammer fig3a --config my.env --set experiment.fig3a_paddings=0:800:10
    simhammer attack --preset t420 --seed 7
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from .config import ENV_LOG_LEVEL, available_presets, load_config
from .exceptions import SimHammerError
from .simulator import Simulator

logger = logging.getLogger(__name__)

COMMANDS = ("calibrate", "fig2", "fig3a", "fig3b", "scan", "attack")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simhammer",
        description="Simulate speculative rowhammer attacks and reproduce their measurements",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Calibrate the attack round on the scaled-down machine
  simhammer calibrate --preset desk

  # Time to first flip per padding, written to results/fig3a.csv
  simhammer fig3a --preset t420 --out results

  # Override single keys
  simhammer attack --preset desk --set attack.mode=dual
        """,
    )
    parser.add_argument("command", choices=COMMANDS, help="Experiment to run")
    parser.add_argument("--config", help="Configuration file (dotenv key=value format)")
    parser.add_argument("--preset", help=f"Preset applied before --config ({', '.join(available_presets())})")
    parser.add_argument("--seed", type=int, help="Seed (overrides SIMHAMMER_SEED and the file)")
    parser.add_argument("--out", help="Output directory (overrides SIMHAMMER_OUT_DIR and the file)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one configuration key; may be repeated",
    )
    parser.add_argument(
        "--log-level",
        default=os.getenv(ENV_LOG_LEVEL, "WARNING"),
        help="Logging level (default: SIMHAMMER_LOG_LEVEL or WARNING)",
    )
    return parser


def run(command: str, sim: Simulator, out_dir: Path):
    experiments = sim.experiments
    if command == "calibrate":
        record = experiments.cmd_calibrate(out_dir=out_dir)
    elif command == "fig2":
        record = experiments.cmd_fig2(out_dir=out_dir)
    elif command == "fig3a":
        record = experiments.cmd_fig3a(out_dir=out_dir)
    elif command == "fig3b":
        record = experiments.cmd_fig3b(out_dir=out_dir)
    elif command == "scan":
        record = experiments.cmd_scan(out_dir=out_dir)
    else:
        record = experiments.cmd_attack(out_dir=out_dir)
    if sim.config.cache.trace:
        sim.cache.write_trace(out_dir / "cache_trace.csv")
    return record


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = load_config(
            path=args.config,
            preset=args.preset,
            overrides=args.overrides,
            seed=args.seed,
            output_dir=args.out,
        )
        out_dir = Path(config.output_dir)
        with Simulator(config) as sim:
            record = run(args.command, sim, out_dir)
    except SimHammerError as e:
        print(f"simhammer: error: {e.message}", file=sys.stderr)
        logger.debug("error details: %s", json.dumps(e.details, default=str))
        return 2

    print(json.dumps(record.summary, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
