"""
Command-line entry point for the M2O hybrid group authentication simulator

    python -m src.main run --nc 3 --scenario honest --key-size test-512
    python -m src.main costs --range 5..400 --timing-preset reference-2019-laptop
    python -m src.main calibrate --iterations 7000 --out timing.json
    python -m src.main scenarios --nc 2,3,10
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import structlog

from src.cli import (
    EXIT_USAGE,
    RunConfig,
    cmd_calibrate,
    cmd_costs,
    cmd_run,
    cmd_scenarios,
)
from src.config import settings
from src.crypto import KeySize
from src.errors import ConfigError
from src.netsim import scenario_names

# Convert LOG_LEVEL string to logging level
LOG_LEVEL_MAP = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}


def configure_logging(level: Optional[str] = None) -> None:
    """Structured JSON logs on stderr; stdout carries command output"""
    log_level = LOG_LEVEL_MAP.get((level or settings.LOG_LEVEL).upper(), logging.WARNING)
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.add_log_level,
            structlog.processors.JSONRenderer()
        ],
        wrapper_class=structlog.make_filtering_bound_logger(log_level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


logger = structlog.get_logger()


def _sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad group sizes {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="m2o", description=settings.APP_NAME)
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Execute HGAKA and HGA once")
    run.add_argument("--nc", type=int, default=None)
    run.add_argument("--seed", type=int, default=None, help="Falls back to M2O_SEED")
    run.add_argument("--delta-t", dest="delta_t_ms", type=int, default=None, help="Freshness window in ms")
    run.add_argument("--key-size", choices=[k.value for k in KeySize], default=None)
    run.add_argument("--scenario", choices=scenario_names(), default=None)
    run.add_argument("--out", dest="output", default=None, help="Transcript path")
    run.add_argument("--config", default=None, help="key=value file; flags override it")

    costs = commands.add_parser("costs", help="Cost CSV over a range of group sizes")
    costs.add_argument("--range", dest="range_text", default="5..400")
    costs.add_argument("--timing-preset", default=None, help="Preset name or calibrated preset file")
    costs.add_argument("--out", type=Path, default=None)

    calibrate = commands.add_parser("calibrate", help="Microbenchmark primitives into a timing preset")
    calibrate.add_argument("--iterations", type=int, default=None)
    calibrate.add_argument("--out", type=Path, default=None)

    scenarios = commands.add_parser("scenarios", help="Run the threat-scenario suite")
    scenarios.add_argument("--nc", type=_sizes, default=[2, 3, 10], help="Comma-separated group sizes")
    scenarios.add_argument("--seed", type=int, default=0)
    scenarios.add_argument("--key-size", choices=[k.value for k in KeySize], default=KeySize.TEST_512.value)
    scenarios.add_argument("--out", type=Path, default=None, help="CSV of the results")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(args.log_level)

    if args.command == "run":
        try:
            config = RunConfig.from_sources(
                {
                    "nc": args.nc,
                    "seed": args.seed,
                    "delta_t_ms": args.delta_t_ms,
                    "key_size": args.key_size,
                    "scenario": args.scenario,
                    "output": args.output,
                },
                config_file=args.config
            )
        except ConfigError as e:
            sys.stderr.write(f"error: {e}\n")
            return EXIT_USAGE
        status = cmd_run(config)
    elif args.command == "costs":
        status = cmd_costs(args.range_text, args.timing_preset, args.out)
    elif args.command == "calibrate":
        status = cmd_calibrate(args.iterations, args.out)
    else:
        status = cmd_scenarios(args.nc, args.seed, KeySize(args.key_size), args.out)

    logger.info("Command finished", command=args.command, status=status)
    return status


if __name__ == "__main__":
    sys.exit(main())
