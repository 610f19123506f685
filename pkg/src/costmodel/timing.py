"""
Timing models: unit costs of primitives and PCC evaluation

The "reference-2019-laptop" preset reproduces the published fitted lines and
is machine-specific. Local presets come from calibrate().
"""

from pathlib import Path
import time
from typing import Callable, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator
import structlog

from src.config import settings
from src.costmodel.formulas import CompCost, OpCounts
from src.crypto import (
    CryptoEngine,
    KeySize,
    SymKey,
    SystemRandomSource,
    generate_rsa_keypair,
)
from src.errors import CalibrationError, ConfigError, MissingUnitCost

logger = structlog.get_logger()

MIN_CALIBRATION_ITERATIONS = 100
MAX_TIMER_RESOLUTION_S = 1e-6
KERBEROS_TICKET_BYTES = 128

OPERATION_KINDS = tuple(OpCounts.model_fields)


class TimingModel(BaseModel):
    """Unit cost in milliseconds for each primitive"""

    name: str
    unit_costs_ms: Dict[str, float] = Field(..., description="Operation kind -> mean ms")
    sem_ms: Dict[str, float] = Field(default_factory=dict, description="Standard error of each mean")
    iterations: Optional[int] = Field(None, description="Samples per primitive when calibrated")
    machine_specific: bool = True

    @field_validator("unit_costs_ms")
    @classmethod
    def _positive_known_kinds(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = set(value) - set(OPERATION_KINDS)
        if unknown:
            raise ValueError(f"unknown operation kinds {sorted(unknown)}")
        bad = [k for k, v in value.items() if not v > 0]
        if bad:
            raise ValueError(f"unit costs must be positive: {bad}")
        return value

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.model_dump_json(indent=2) + "\n")


REFERENCE_2019_LAPTOP = TimingModel(
    name="reference-2019-laptop",
    unit_costs_ms={
        "se": 0.016,
        "hmac": 0.032,
        "ae": 2.099,
        "h": 0.021,
        "ad": 16.452,
        "kse": 0.068,
        "ksd": 0.068,
    }
)

UNIT = TimingModel(
    name="unit",
    unit_costs_ms={kind: 1.0 for kind in OPERATION_KINDS},
    machine_specific=False
)

PRESETS: Dict[str, TimingModel] = {model.name: model for model in (REFERENCE_2019_LAPTOP, UNIT)}


def load_timing(name_or_path: Optional[str] = None) -> TimingModel:
    """
    Resolve a preset name or a calibrated preset file

    Args:
        name_or_path: Preset name, JSON path, or None for settings.TIMING_PRESET

    Raises:
        ConfigError: Neither a preset nor a readable preset file
    """
    name_or_path = name_or_path or settings.TIMING_PRESET
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    try:
        return TimingModel.model_validate_json(Path(name_or_path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(
            f"timing preset {name_or_path!r} is neither one of {sorted(PRESETS)} nor a preset file: {e}"
        ) from e


def pcc_ms(cost: CompCost, timing: TimingModel) -> float:
    """
    Protocol crypto computational cost

    Args:
        cost: Operation counts
        timing: Unit costs

    Returns:
        Sum of count * unit cost, in milliseconds

    Raises:
        MissingUnitCost: A non-zero count has no unit cost
    """
    total = 0.0
    for kind, count in cost.counts.nonzero().items():
        if kind not in timing.unit_costs_ms:
            raise MissingUnitCost(f"timing model {timing.name!r} has no cost for {kind}")
        total += count * timing.unit_costs_ms[kind]
    return total


def _measure(operation: Callable[[], object], iterations: int) -> np.ndarray:
    samples = np.empty(iterations, dtype=np.float64)
    for i in range(iterations):
        start = time.perf_counter_ns()
        operation()
        samples[i] = time.perf_counter_ns() - start
    return samples / 1e6


def calibrate(iterations: Optional[int] = None, key_size: KeySize = KeySize.FULL_3072) -> TimingModel:
    """
    Microbenchmark every primitive on this machine

    Args:
        iterations: Samples per primitive, defaults to settings.CALIBRATION_ITERATIONS
        key_size: RSA key size to time

    Returns:
        Timing model with mean unit costs and their standard errors

    Raises:
        ConfigError: Fewer than MIN_CALIBRATION_ITERATIONS samples
        CalibrationError: The clock is too coarse to time a primitive
    """
    if iterations is None:
        iterations = settings.CALIBRATION_ITERATIONS
    if iterations < MIN_CALIBRATION_ITERATIONS:
        raise ConfigError(f"calibration needs at least {MIN_CALIBRATION_ITERATIONS} iterations, got {iterations}")

    resolution = time.get_clock_info("perf_counter").resolution
    if resolution > MAX_TIMER_RESOLUTION_S:
        raise CalibrationError(f"perf_counter resolution {resolution}s is coarser than {MAX_TIMER_RESOLUTION_S}s")

    rng = SystemRandomSource()
    engine = CryptoEngine(rng)
    keypair = generate_rsa_keypair(key_size.bits, rng, insecure_test_keys=key_size.insecure)
    key = SymKey.generate(rng)
    item = rng.random_bytes(32)
    nonce = rng.random_bytes(16)
    ticket = rng.random_bytes(KERBEROS_TICKET_BYTES)
    sealed_ticket = engine.sym_encrypt(key, ticket)
    token = engine.rsa_encrypt_blocks(keypair.public, nonce)

    benchmarks: Dict[str, Callable[[], object]] = {
        "se": lambda: engine.sym_encrypt(key, item),
        "hmac": lambda: engine.hmac(key, item),
        "ae": lambda: engine.rsa_encrypt_blocks(keypair.public, nonce),
        "h": lambda: engine.hash(item),
        "ad": lambda: engine.rsa_decrypt_blocks(keypair.private, token, len(nonce)),
        "kse": lambda: engine.sym_encrypt(key, ticket),
        "ksd": lambda: engine.sym_decrypt(key, sealed_ticket),
    }

    means: Dict[str, float] = {}
    sems: Dict[str, float] = {}
    for kind, operation in benchmarks.items():
        samples = _measure(operation, iterations)
        mean = float(samples.mean())
        if mean <= 0:
            raise CalibrationError(f"{kind} timed at zero; timer cannot resolve it")
        means[kind] = mean
        sems[kind] = float(samples.std(ddof=1) / np.sqrt(iterations))
        logger.info("Primitive calibrated", kind=kind, mean_ms=round(mean, 6), sem_ms=round(sems[kind], 6))

    return TimingModel(
        name=f"calibrated-{key_size.value}",
        unit_costs_ms=means,
        sem_ms=sems,
        iterations=iterations
    )
