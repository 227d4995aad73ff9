"""
Command-line entry point ``hk``.

    hk toy1d      --config run.json --seed 0 --out runs/toy
    hk svgd-gauss --sweep 10 --jobs 4 --out runs/gauss
    hk svgd-bnn   --dataset data/concrete.csv
    hk gan2d      --config gan.json
    hk validate

Exit codes: 0 success, 1 failed validation or run, 2 configuration or I/O
error. Reports go to stdout, logs to stderr.
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from dotenv import load_dotenv

from src.constants import (
    EXIT_IO_ERROR,
    EXIT_OK,
    EXIT_RUN_FAILED,
    EXIT_VALIDATION_FAILED,
)
from src.core.errors import ConfigError
from src.runtime import apply_thread_limit

logger = logging.getLogger(__name__)

RUN_COMMANDS = {
    "toy1d": "1-D heat kernel recovery against the closed form",
    "svgd-gauss": "vanilla vs heat-kernel SVGD on a Gaussian target",
    "svgd-bnn": "Bayesian neural network regression",
    "gan2d": "2-D generative training with a learned kernel",
}


@dataclass
class SeedOutcome:
    seed: int
    out_dir: str
    status: str
    error: Optional[str] = None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--debug", action="store_true", help="verbose logging")

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", help="JSON configuration document")
    run_flags.add_argument("--seed", type=int, help="override the configured seed")
    run_flags.add_argument("--out", help="output directory")
    run_flags.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    run_flags.add_argument(
        "--sweep", type=int, default=1, help="run seeds seed..seed+K-1"
    )

    parser = argparse.ArgumentParser(prog="hk", description="Heat kernel learning experiments")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in RUN_COMMANDS.items():
        sub = commands.add_parser(name, help=help_text, parents=[common, run_flags])
        if name == "svgd-bnn":
            sub.add_argument("--dataset", help="CSV file: feature columns, then the target")
    commands.add_parser("validate", help="oracle and invariant suites", parents=[common])
    return parser


def run_seed(cfg, dataset_path: Optional[str], debug: bool) -> SeedOutcome:
    """Run one configured experiment; also the process-pool work item."""
    from src.hk_controller import create_hk_controller

    if debug:
        logging.getLogger().setLevel(logging.DEBUG)
    result = create_hk_controller(debug=debug).run(cfg, cfg.out_dir, dataset_path)
    manifest = result.manifest
    return SeedOutcome(cfg.seed, cfg.out_dir, manifest.status, manifest.error)


def _seed_configs(cfg, sweep: int) -> list:
    from src.config import MAX_SEED

    if sweep < 1:
        raise ConfigError("--sweep must be >= 1")
    if cfg.seed + sweep - 1 > MAX_SEED:
        raise ConfigError("Seed sweep runs past the 64-bit seed range")
    if sweep == 1:
        return [cfg]
    base = Path(cfg.out_dir)
    return [
        cfg.with_overrides(seed=cfg.seed + i, out_dir=base / f"seed-{cfg.seed + i}")
        for i in range(sweep)
    ]


def _run_experiment(args: argparse.Namespace) -> int:
    from src.config import ExperimentConfig

    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    cfg = cfg.with_overrides(experiment=args.command, seed=args.seed, out_dir=args.out)
    configs = _seed_configs(cfg, args.sweep)
    dataset = getattr(args, "dataset", None)

    outcomes: List[SeedOutcome]
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(run_seed, c, dataset, args.debug) for c in configs]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_seed(c, dataset, args.debug) for c in configs]

    for outcome in outcomes:
        line = f"seed {outcome.seed}: {outcome.status} -> {outcome.out_dir}"
        print(line if outcome.error is None else f"{line} ({outcome.error})")
    return EXIT_OK if all(o.status == "ok" for o in outcomes) else EXIT_RUN_FAILED


def _run_validate(args: argparse.Namespace) -> int:
    from src.controllers.validation.validation_controller import ValidationController

    report = ValidationController(debug=args.debug).run_validate()
    print(report.format_table())
    return EXIT_OK if report.all_passed else EXIT_VALIDATION_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    load_dotenv()
    try:
        apply_thread_limit()
        if args.command == "validate":
            return _run_validate(args)
        return _run_experiment(args)
    except (ConfigError, FileNotFoundError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
