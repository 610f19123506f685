"""
Command implementations; each returns the process exit status

0: expected outcome reached, 1: expectation mismatch, 2: usage or config error.
"""

import asyncio
import csv
import re
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

import structlog

from src.actors import GroupConfig, KeyRegistry, ReplayCache
from src.cli.run_config import RunConfig
from src.costmodel import (
    calibrate,
    cost_rows,
    load_timing,
    reconcile,
    relative_summary,
    write_csv,
)
from src.crypto import DeterministicRandom, KeySize
from src.errors import CalibrationError, ConfigError, DomainError
from src.netsim import ScenarioResult, get_scenario, scenario_suite
from src.netsim.network import ReplayCacheFactory

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2

DEFAULT_SCENARIO_SIZES = (2, 3, 10)

_RANGE = re.compile(r"^\s*(\d+)\s*(?:(?:\.\.|-)\s*(\d+))?\s*$")


def parse_range(text: str) -> List[int]:
    """
    Parse "5..400", "5-400" or "7"

    Raises:
        ConfigError: Malformed or empty range
    """
    match = _RANGE.match(text)
    if not match:
        raise ConfigError(f"bad range {text!r}; expected N or A..B")
    low = int(match.group(1))
    high = int(match.group(2)) if match.group(2) else low
    if high < low:
        raise ConfigError(f"empty range {text!r}")
    return list(range(low, high + 1))


def provision(nc: int, seed: int, key_size: KeySize) -> KeyRegistry:
    """Deterministic keys for a group of nc clients"""
    return KeyRegistry.provision(
        GroupConfig.sequential(nc),
        key_size,
        DeterministicRandom(seed).fork(f"keys:{nc}")
    )


def _open_out(path: Optional[Path]) -> TextIO:
    return open(path, "w", newline="") if path else sys.stdout


def cmd_run(config: RunConfig) -> int:
    """
    Execute one run, write the transcript dump and the reconciliation report

    With an output path the report goes next to it with a
    `.reconciliation.txt` suffix; otherwise both go to standard output.
    """
    scenario = get_scenario(config.scenario)
    registry = provision(config.nc, config.seed, config.key_size)
    result, transcript = asyncio.run(scenario.execute(
        config.nc,
        config.seed,
        config.key_size,
        registry=registry,
        delta_t_ms=config.delta_t_ms
    ))
    report = reconcile(transcript, config.nc)

    if config.output:
        config.output.write_text(transcript.dump())
        config.output.with_name(config.output.name + ".reconciliation.txt").write_text(report.render())
    else:
        sys.stdout.write(transcript.dump())
        sys.stdout.write(report.render())

    ok = result.passed
    if config.scenario == "honest":
        ok = ok and report.ok
    sys.stderr.write(
        f"{result.name} nc={result.nc}: {'PASS' if ok else 'FAIL'} ({result.observed})\n"
    )
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_costs(range_text: str, timing_preset: Optional[str] = None, out: Optional[Path] = None) -> int:
    """Emit the cost CSV over a range of group sizes"""
    try:
        ncs = parse_range(range_text)
        timing = load_timing(timing_preset)
        rows = cost_rows(ncs, timing)
    except (ConfigError, DomainError) as e:
        logger.error("Cost table not generated", error=str(e))
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE

    stream = _open_out(out)
    try:
        write_csv(rows, stream)
    finally:
        if stream is not sys.stdout:
            stream.close()

    for key, value in relative_summary(rows).items():
        sys.stderr.write(f"{key}: {value}\n")
    return EXIT_OK


def cmd_calibrate(iterations: Optional[int] = None, out: Optional[Path] = None) -> int:
    """Microbenchmark the primitives and write a timing preset file"""
    try:
        timing = calibrate(iterations)
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except CalibrationError as e:
        logger.error("Calibration failed", error=str(e))
        sys.stderr.write(f"error: {e}\n")
        return EXIT_MISMATCH

    if out:
        timing.save(out)
    else:
        sys.stdout.write(timing.model_dump_json(indent=2) + "\n")
    return EXIT_OK


def render_table(results: Sequence[ScenarioResult]) -> str:
    width = max([len(r.name) for r in results] + [8])
    lines = [f"{'scenario':<{width}}  {'nc':>3}  result  observed"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.nc:>3}  {'PASS' if r.passed else 'FAIL':<6}  {r.observed}")
    return "\n".join(lines) + "\n"


def cmd_scenarios(
    ncs: Sequence[int] = DEFAULT_SCENARIO_SIZES,
    seed: int = 0,
    key_size: KeySize = KeySize.TEST_512,
    out: Optional[Path] = None,
    replay_cache_factory: ReplayCacheFactory = ReplayCache
) -> int:
    """
    Run every threat scenario at every group size

    Args:
        ncs: Group sizes
        seed: Run seed
        key_size: RSA preset
        out: Optional CSV of the results
        replay_cache_factory: Replay cache for AS and target

    Returns:
        0 iff every scenario matched its expectation
    """
    if any(nc < 2 for nc in ncs):
        sys.stderr.write("error: group sizes must be at least 2\n")
        return EXIT_USAGE

    async def run_all() -> List[ScenarioResult]:
        results = []
        for nc in ncs:
            registry = provision(nc, seed, key_size)
            for scenario in scenario_suite():
                result, _ = await scenario.execute(
                    nc,
                    seed,
                    key_size,
                    replay_cache_factory=replay_cache_factory,
                    registry=registry
                )
                results.append(result)
        return results

    results = asyncio.run(run_all())
    sys.stdout.write(render_table(results))

    if out:
        with open(out, "w", newline="") as stream:
            writer = csv.DictWriter(stream, fieldnames=list(ScenarioResult.model_fields), lineterminator="\n")
            writer.writeheader()
            for result in results:
                writer.writerow(result.model_dump())

    failed = [f"{r.name}@{r.nc}" for r in results if not r.passed]
    if failed:
        logger.error("Scenario expectations not met", failed=failed)
        return EXIT_MISMATCH
    return EXIT_OK
