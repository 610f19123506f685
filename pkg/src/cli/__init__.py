"""
Command-line front end
"""

from src.cli.commands import (
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_USAGE,
    cmd_calibrate,
    cmd_costs,
    cmd_run,
    cmd_scenarios,
    parse_range,
)
from src.cli.run_config import RunConfig

__all__ = [
    "EXIT_MISMATCH",
    "EXIT_OK",
    "EXIT_USAGE",
    "RunConfig",
    "cmd_calibrate",
    "cmd_costs",
    "cmd_run",
    "cmd_scenarios",
    "parse_range",
]
