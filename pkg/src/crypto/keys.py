"""
Key material: symmetric keys, nonces and raw RSA keypairs
"""

from enum import Enum
import math
from typing import Optional

from cryptography.hazmat.primitives.asymmetric import rsa
from cryptography.hazmat.primitives.constant_time import bytes_eq
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
import structlog

from src.config import settings
from src.crypto.rng import RandomSource, SystemRandomSource

logger = structlog.get_logger()

SYM_KEY_BYTES = 16
NONCE_BYTES = 16
FULL_RSA_BITS = 3072

_SMALL_PRIMES = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151,
    157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233,
]


def constant_time_equal(left: bytes, right: bytes) -> bool:
    """Compare two byte strings without data-dependent timing"""
    return bytes_eq(left, right)


def rsa_block_bytes(n: int, input_block_bits: Optional[int] = None) -> int:
    """
    Plaintext bytes per raw RSA block

    Args:
        n: Modulus
        input_block_bits: Configured input block size (2544 bits by default)

    Returns:
        min(input block, largest whole-byte chunk strictly below n)
    """
    configured = (input_block_bits or settings.RSA_INPUT_BLOCK_BITS) // 8
    return max(1, min(configured, (n.bit_length() - 1) // 8))


class SymKey(BaseModel):
    """128-bit symmetric key (K_Ci, K_Di, K_GDi, SK, OrNonce-as-key)"""

    material: bytes = Field(..., description="128-bit secret")

    model_config = ConfigDict(frozen=True)

    @field_validator("material")
    @classmethod
    def _exactly_128_bits(cls, value: bytes) -> bytes:
        if len(value) != SYM_KEY_BYTES:
            raise ValueError(f"symmetric key must be {SYM_KEY_BYTES} bytes, got {len(value)}")
        return value

    @classmethod
    def generate(cls, rng: RandomSource) -> "SymKey":
        """Draw a fresh key"""
        return cls(material=rng.random_bytes(SYM_KEY_BYTES))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymKey):
            return NotImplemented
        return constant_time_equal(self.material, other.material)

    def __hash__(self) -> int:
        return hash(self.material)

    def __repr__(self) -> str:
        return "SymKey(<redacted>)"


class NonceKind(str, Enum):
    """Nonce purpose"""
    EN = "EnNonce"
    OR = "OrNonce"


class Nonce(BaseModel):
    """128-bit nonce; EnNonces are challenges, OrNonces are authorization tokens"""

    value: bytes = Field(..., description="128-bit big-endian value")
    kind: NonceKind = Field(..., description="EnNonce or OrNonce")

    model_config = ConfigDict(frozen=True)

    @field_validator("value")
    @classmethod
    def _exactly_128_bits(cls, value: bytes) -> bytes:
        if len(value) != NONCE_BYTES:
            raise ValueError(f"nonce must be {NONCE_BYTES} bytes, got {len(value)}")
        return value

    @classmethod
    def from_int(cls, value: int, kind: NonceKind) -> "Nonce":
        return cls(value=value.to_bytes(NONCE_BYTES, "big"), kind=kind)

    def as_int(self) -> int:
        return int.from_bytes(self.value, "big")

    def as_key(self) -> SymKey:
        """Use the nonce directly as a 128-bit symmetric key (no KDF)"""
        return SymKey(material=self.value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Nonce):
            return NotImplemented
        return self.kind == other.kind and constant_time_equal(self.value, other.value)

    def __hash__(self) -> int:
        return hash((self.kind, self.value))


class KeySize(str, Enum):
    """RSA key-size presets"""
    TEST_64 = "test-64"
    TEST_512 = "test-512"
    FULL_3072 = "full-3072"

    @property
    def bits(self) -> int:
        return int(self.value.split("-")[1])

    @property
    def insecure(self) -> bool:
        return self is not KeySize.FULL_3072


class RsaPublicKey(BaseModel):
    """Public key (n, e)"""

    n: int = Field(..., gt=0, description="Modulus")
    e: int = Field(..., gt=0, description="Public exponent")

    model_config = ConfigDict(frozen=True)

    @property
    def byte_length(self) -> int:
        """Fixed width of one serialized ciphertext block"""
        return (self.n.bit_length() + 7) // 8

    def block_bytes(self, input_block_bits: Optional[int] = None) -> int:
        """Plaintext bytes per raw RSA block"""
        return rsa_block_bytes(self.n, input_block_bits)


class RsaPrivateKey(BaseModel):
    """Private key (n, d)"""

    n: int = Field(..., gt=0, description="Modulus")
    d: int = Field(..., gt=0, description="Private exponent")

    model_config = ConfigDict(frozen=True)

    def block_bytes(self, input_block_bits: Optional[int] = None) -> int:
        return rsa_block_bytes(self.n, input_block_bits)

    def __repr__(self) -> str:
        return f"RsaPrivateKey(n_bits={self.n.bit_length()}, d=<redacted>)"


class RsaKeyPair(BaseModel):
    """
    Raw (textbook) RSA keypair of the target device

    Full-size keys have a 3072-bit modulus; smaller moduli are accepted only
    when insecure_test_keys is set.
    """

    n: int = Field(..., gt=0, description="Modulus")
    e: int = Field(..., gt=0, description="Public exponent")
    d: int = Field(..., gt=0, description="Private exponent")
    p: int = Field(..., gt=1, description="First prime factor")
    q: int = Field(..., gt=1, description="Second prime factor")
    insecure_test_keys: bool = Field(False, description="Allow moduli other than 3072 bits")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_key(self) -> "RsaKeyPair":
        if not self.insecure_test_keys and self.n.bit_length() != FULL_RSA_BITS:
            raise ValueError(
                f"modulus must have {FULL_RSA_BITS} bits without insecure_test_keys, "
                f"got {self.n.bit_length()}"
            )
        if self.p * self.q != self.n:
            raise ValueError("p * q != n")
        carmichael = math.lcm(self.p - 1, self.q - 1)
        if (self.e * self.d) % carmichael != 1:
            raise ValueError("e * d is not 1 mod lambda(n)")
        return self

    @property
    def public(self) -> RsaPublicKey:
        return RsaPublicKey(n=self.n, e=self.e)

    @property
    def private(self) -> RsaPrivateKey:
        return RsaPrivateKey(n=self.n, d=self.d)

    def __repr__(self) -> str:
        return f"RsaKeyPair(n_bits={self.n.bit_length()}, e={self.e})"


def _is_probable_prime(candidate: int, rng: RandomSource, rounds: int = 40) -> bool:
    """Miller-Rabin primality test with witnesses drawn from rng"""
    if candidate < 2:
        return False
    if candidate in (2, 3):
        return True
    if candidate % 2 == 0:
        return False
    for small in _SMALL_PRIMES:
        if candidate == small:
            return True
        if candidate % small == 0:
            return False

    r, s = 0, candidate - 1
    while s % 2 == 0:
        r += 1
        s //= 2

    for _ in range(rounds):
        a = rng.randrange(2, candidate - 1)
        x = pow(a, s, candidate)
        if x in (1, candidate - 1):
            continue
        for _ in range(r - 1):
            x = pow(x, 2, candidate)
            if x == candidate - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: RandomSource) -> int:
    """Prime with exactly `bits` bits and its two top bits set"""
    while True:
        candidate = int.from_bytes(rng.random_bytes((bits + 7) // 8), "big")
        candidate &= (1 << bits) - 1
        candidate |= (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if _is_probable_prime(candidate, rng):
            return candidate


def generate_rsa_keypair(
    bits: int,
    rng: RandomSource,
    insecure_test_keys: bool = False,
    public_exponent: Optional[int] = None
) -> RsaKeyPair:
    """
    Generate a raw RSA keypair

    Deterministic sources use seeded Miller-Rabin generation so a seed fixes
    the key; OS-entropy runs at 1024 bits and above use the cryptography
    library's generator.

    Args:
        bits: Modulus size
        rng: Random source
        insecure_test_keys: Required for any size other than 3072
        public_exponent: Defaults to settings.RSA_PUBLIC_EXPONENT

    Returns:
        Validated keypair
    """
    if bits != FULL_RSA_BITS and not insecure_test_keys:
        raise ValueError(f"{bits}-bit RSA keys require insecure_test_keys")
    e = public_exponent or settings.RSA_PUBLIC_EXPONENT

    if isinstance(rng, SystemRandomSource) and bits >= 1024:
        key = rsa.generate_private_key(public_exponent=e, key_size=bits)
        numbers = key.private_numbers()
        return RsaKeyPair(
            n=numbers.public_numbers.n,
            e=e,
            d=numbers.d,
            p=numbers.p,
            q=numbers.q,
            insecure_test_keys=insecure_test_keys
        )

    half = bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(bits - half, rng)
        if p == q:
            continue
        carmichael = math.lcm(p - 1, q - 1)
        if math.gcd(e, carmichael) != 1:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        d = pow(e, -1, carmichael)
        logger.debug("RSA keypair generated", bits=bits)
        return RsaKeyPair(n=n, e=e, d=d, p=p, q=q, insecure_test_keys=insecure_test_keys)
