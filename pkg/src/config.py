"""
Application configuration using Pydantic settings
"""

from typing import Optional

from pydantic import ConfigDict
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings"""

    # Application
    APP_NAME: str = "M2O Hybrid Group Authentication"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = "WARNING"

    # Freshness and timers (logical milliseconds)
    DELTA_T_MS: int = 5000
    HOP_LATENCY_MS: int = 10
    LEADER_TIMEOUT_FACTOR: int = 2
    PARTICIPANT_TIMEOUT_FACTOR: int = 4
    REPLAY_WINDOW_FACTOR: int = 2

    # Cryptographic suite
    KEY_SIZE: str = "full-3072"
    RSA_PUBLIC_EXPONENT: int = 65537
    RSA_INPUT_BLOCK_BITS: int = 2544

    # Cost model
    TIMING_PRESET: str = "reference-2019-laptop"
    CALIBRATION_ITERATIONS: int = 7000

    # Static authorization table (JSON: {"<target id>": [[client ids], ...]})
    AUTHORIZATION_FILE: Optional[str] = None

    # Seed fallback for deterministic runs
    M2O_SEED: Optional[int] = None

    @property
    def LEADER_TIMEOUT_MS(self) -> int:
        """Leader wait before resend/terminate"""
        return self.LEADER_TIMEOUT_FACTOR * self.DELTA_T_MS

    @property
    def PARTICIPANT_TIMEOUT_MS(self) -> int:
        """AS session and client waits; long enough to cover one leader resend"""
        return self.PARTICIPANT_TIMEOUT_FACTOR * self.DELTA_T_MS

    @property
    def REPLAY_WINDOW_MS(self) -> int:
        """How long (sender, Ts, EnNonce) tuples stay in the replay cache"""
        return self.REPLAY_WINDOW_FACTOR * self.DELTA_T_MS

    model_config = ConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore"
    )


settings = Settings()
