"""
Random sources - injectable CSPRNG abstraction

Protocol runs draw every nonce, key and RSA prime through a RandomSource so a
seed fixes the whole transcript. SystemRandomSource is the default outside
tests.
"""

from abc import ABC, abstractmethod
import random
import secrets


class RandomSource(ABC):
    """Source of random bytes and integers"""

    @abstractmethod
    def random_bytes(self, length: int) -> bytes:
        """
        Draw random bytes

        Args:
            length: Number of bytes

        Returns:
            Byte string of the requested length
        """

    @abstractmethod
    def randbelow(self, upper: int) -> int:
        """Uniform integer in [0, upper)"""

    @abstractmethod
    def fork(self, label: str) -> "RandomSource":
        """
        Derive an independent source for one component

        Args:
            label: Stable name of the component (e.g. "actor:7")

        Returns:
            A new random source
        """

    def randrange(self, lower: int, upper: int) -> int:
        """Uniform integer in [lower, upper)"""
        return lower + self.randbelow(upper - lower)


class DeterministicRandom(RandomSource):
    """
    Seedable source for reproducible runs and tests

    Not suitable for real key material.
    """

    def __init__(self, seed: int | str) -> None:
        self.seed = seed
        self._random = random.Random(seed)

    def random_bytes(self, length: int) -> bytes:
        if length == 0:
            return b""
        return self._random.getrandbits(8 * length).to_bytes(length, "big")

    def randbelow(self, upper: int) -> int:
        return self._random.randrange(upper)

    def fork(self, label: str) -> "DeterministicRandom":
        # str seeds are hashed with SHA-512 by random.Random, independent of PYTHONHASHSEED
        return DeterministicRandom(f"{self.seed}/{label}")


class SystemRandomSource(RandomSource):
    """OS-entropy source"""

    def random_bytes(self, length: int) -> bytes:
        return secrets.token_bytes(length)

    def randbelow(self, upper: int) -> int:
        return secrets.randbelow(upper)

    def fork(self, label: str) -> "SystemRandomSource":
        return SystemRandomSource()
