"""
Run configuration: flags over an optional key=value file over M2O_SEED
"""

import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, field_validator

from src.config import settings
from src.crypto import KeySize
from src.errors import ConfigError
from src.netsim import scenario_names

SEED_MAX = 2 ** 64 - 1
SEED_ENV = "M2O_SEED"

# Keys accepted in a config file, mapped to RunConfig fields
_FILE_KEYS = {
    "nc": "nc",
    "seed": "seed",
    "delta_t": "delta_t_ms",
    "delta_t_ms": "delta_t_ms",
    "key_size": "key_size",
    "scenario": "scenario",
    "out": "output",
    "output": "output",
}


class RunConfig(BaseModel):
    """Validated parameters of one protocol execution"""

    nc: int = Field(3, ge=2, description="Group size")
    seed: int = Field(0, ge=0, le=SEED_MAX)
    delta_t_ms: int = Field(default_factory=lambda: settings.DELTA_T_MS, gt=0)
    key_size: KeySize = Field(KeySize.FULL_3072)
    scenario: str = Field("honest", description="Scenario name or 'honest'")
    output: Optional[Path] = Field(None, description="Transcript path; standard output when unset")

    @field_validator("scenario")
    @classmethod
    def _known_scenario(cls, value: str) -> str:
        if value not in scenario_names():
            raise ValueError(f"unknown scenario {value!r}; known: {', '.join(scenario_names())}")
        return value

    @classmethod
    def from_sources(
        cls,
        flags: Mapping[str, Any],
        config_file: Optional[str] = None,
        env: Optional[Mapping[str, str]] = None
    ) -> "RunConfig":
        """
        Merge configuration sources

        Args:
            flags: Command-line values; None means not given
            config_file: Optional key=value file
            env: Environment for the M2O_SEED fallback

        Raises:
            ConfigError: Unreadable file, unknown key or invalid value
        """
        env = os.environ if env is None else env
        values: Dict[str, Any] = {}

        if config_file:
            if not Path(config_file).is_file():
                raise ConfigError(f"config file {config_file} not found")
            for key, value in dotenv_values(config_file).items():
                field = _FILE_KEYS.get(key.lower().replace("-", "_"))
                if field is None:
                    raise ConfigError(f"unknown key {key!r} in {config_file}")
                values[field] = value

        values.update({k: v for k, v in flags.items() if v is not None})
        if "seed" not in values:
            fallback = env.get(SEED_ENV) or settings.M2O_SEED
            if fallback is not None:
                values["seed"] = fallback

        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise ConfigError(str(e)) from e
