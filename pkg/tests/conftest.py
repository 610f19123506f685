"""
Shared fixtures
"""

import pytest

from src.actors import GroupConfig, KeyRegistry
from src.crypto import CryptoEngine, DeterministicRandom, KeySize, RsaKeyPair, generate_rsa_keypair
from src.main import configure_logging


@pytest.fixture(autouse=True)
def quiet_logging() -> None:
    """Bind structured logs to the current stderr so stdout stays command output"""
    configure_logging("WARNING")


@pytest.fixture
def rng() -> DeterministicRandom:
    return DeterministicRandom(7)


@pytest.fixture
def engine(rng: DeterministicRandom) -> CryptoEngine:
    return CryptoEngine(rng.fork("engine"))


@pytest.fixture(scope="session")
def keypair() -> RsaKeyPair:
    """512-bit test keypair"""
    return generate_rsa_keypair(512, DeterministicRandom(11), insecure_test_keys=True)


@pytest.fixture
def group() -> GroupConfig:
    return GroupConfig.sequential(3)


@pytest.fixture
def registry(group: GroupConfig) -> KeyRegistry:
    return KeyRegistry.provision(group, KeySize.TEST_512, DeterministicRandom(5))
