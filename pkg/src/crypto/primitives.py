"""
Crypto Engine - instrumented primitives

Every primitive increments the OpCounter of the protocol currently being
metered, so a run can be compared operation-for-operation with the cost
formulas. Library exceptions never leave this module: bad padding becomes
PaddingError and out-of-range RSA operands become RangeError.
"""

from contextlib import contextmanager
from enum import Enum
from typing import Dict, Iterator, List, Optional

from cryptography.hazmat.primitives import hashes, hmac as crypto_hmac, padding
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from pydantic import BaseModel, Field
import structlog

from src.config import settings
from src.crypto.keys import (
    NONCE_BYTES,
    Nonce,
    NonceKind,
    RsaPrivateKey,
    RsaPublicKey,
    SymKey,
)
from src.crypto.rng import RandomSource, SystemRandomSource
from src.errors import DecryptFailure, PaddingError, RangeError

logger = structlog.get_logger()

AES_BLOCK_BITS = 128
DIGEST_BITS = 256

# Fixed IV: ciphertext length equals the padded plaintext length, so
# encryption is deterministic per key (see docs/architecture.md)
_CBC_IV = bytes(AES_BLOCK_BITS // 8)


class Protocol(str, Enum):
    """Protocol an operation or message belongs to"""
    HGAKA = "HGAKA"
    HGA = "HGA"


class OpCounter(BaseModel):
    """Counts of cryptographic operations in one execution scope"""

    se: int = Field(0, ge=0, description="Symmetric encrypt/decrypt calls")
    ae: int = Field(0, ge=0, description="Asymmetric encrypt calls")
    ad: int = Field(0, ge=0, description="Asymmetric decrypt calls")
    h: int = Field(0, ge=0, description="Hash calls")
    hmac: int = Field(0, ge=0, description="HMAC calls")

    @property
    def total(self) -> int:
        return self.se + self.ae + self.ad + self.h + self.hmac

    def __add__(self, other: "OpCounter") -> "OpCounter":
        return OpCounter(
            se=self.se + other.se,
            ae=self.ae + other.ae,
            ad=self.ad + other.ad,
            h=self.h + other.h,
            hmac=self.hmac + other.hmac
        )

    def __sub__(self, other: "OpCounter") -> "OpCounter":
        return OpCounter(
            se=self.se - other.se,
            ae=self.ae - other.ae,
            ad=self.ad - other.ad,
            h=self.h - other.h,
            hmac=self.hmac - other.hmac
        )


class CryptoEngine:
    """
    Primitive operations bound to one actor

    Holds the actor's random source and one OpCounter per protocol. Counters
    only grow during an execution; reset() is for use between executions.
    """

    def __init__(
        self,
        rng: Optional[RandomSource] = None,
        input_block_bits: Optional[int] = None
    ) -> None:
        """
        Initialize engine

        Args:
            rng: Random source (OS entropy when omitted)
            input_block_bits: RSA input block size, defaults to settings
        """
        self.rng = rng or SystemRandomSource()
        self.input_block_bits = input_block_bits or settings.RSA_INPUT_BLOCK_BITS
        self.counters: Dict[Protocol, OpCounter] = {p: OpCounter() for p in Protocol}
        self.issued: List[Nonce] = []
        self._protocol = Protocol.HGAKA

    @property
    def counter(self) -> OpCounter:
        """Counter of the protocol currently metered"""
        return self.counters[self._protocol]

    @contextmanager
    def metering(self, protocol: Protocol) -> Iterator[OpCounter]:
        """Book every operation inside the block to `protocol`"""
        previous = self._protocol
        self._protocol = protocol
        try:
            yield self.counters[protocol]
        finally:
            self._protocol = previous

    def totals(self) -> OpCounter:
        """Sum over all protocols"""
        total = OpCounter()
        for counter in self.counters.values():
            total = total + counter
        return total

    def snapshot(self) -> OpCounter:
        return self.totals().model_copy()

    def reset(self) -> None:
        self.counters = {p: OpCounter() for p in Protocol}
        self.issued = []

    # ------------------------------------------------------------------
    # Symmetric
    # ------------------------------------------------------------------

    def sym_encrypt(self, key: SymKey, plaintext: bytes) -> bytes:
        """
        AES-128-CBC with always-add PKCS7 padding

        Args:
            key: 128-bit key
            plaintext: Non-empty message

        Returns:
            Ciphertext of 128*ceil((bits+1)/128) bits
        """
        if not plaintext:
            raise ValueError("plaintext must be non-empty")
        self.counter.se += 1
        padder = padding.PKCS7(AES_BLOCK_BITS).padder()
        padded = padder.update(plaintext) + padder.finalize()
        encryptor = Cipher(algorithms.AES(key.material), modes.CBC(_CBC_IV)).encryptor()
        return encryptor.update(padded) + encryptor.finalize()

    def sym_decrypt(
        self,
        key: SymKey,
        ciphertext: bytes,
        expected_length: Optional[int] = None
    ) -> bytes:
        """
        Inverse of sym_encrypt

        PKCS7 alone accepts about one wrong-key decryption in 256 (a trailing
        0x01 byte). Callers that know the plaintext length pass it, which pins
        the pad to its exact width.

        Args:
            key: 128-bit key
            ciphertext: Whole blocks
            expected_length: Plaintext length in bytes, when fixed

        Raises:
            PaddingError: Wrong length, malformed padding or a plaintext of
                another length than expected
        """
        self.counter.se += 1
        if not ciphertext or len(ciphertext) % (AES_BLOCK_BITS // 8):
            raise PaddingError(f"ciphertext length {len(ciphertext)} is not a whole number of blocks")
        decryptor = Cipher(algorithms.AES(key.material), modes.CBC(_CBC_IV)).decryptor()
        padded = decryptor.update(ciphertext) + decryptor.finalize()
        unpadder = padding.PKCS7(AES_BLOCK_BITS).unpadder()
        try:
            plaintext = unpadder.update(padded) + unpadder.finalize()
        except ValueError as e:
            raise PaddingError("invalid padding") from e
        if expected_length is not None and len(plaintext) != expected_length:
            raise PaddingError(f"padding leaves {len(plaintext)} bytes, expected {expected_length}")
        return plaintext

    # ------------------------------------------------------------------
    # Raw RSA
    # ------------------------------------------------------------------

    def rsa_raw_encrypt(self, pub: RsaPublicKey, m: int) -> int:
        """Textbook RSA: m^e mod n"""
        if not 0 <= m < pub.n:
            raise RangeError("plaintext outside [0, n)")
        self.counter.ae += 1
        return pow(m, pub.e, pub.n)

    def rsa_raw_decrypt(self, priv: RsaPrivateKey, c: int) -> int:
        """Textbook RSA: c^d mod n"""
        if not 0 <= c < priv.n:
            raise RangeError("ciphertext outside [0, n)")
        self.counter.ad += 1
        return pow(c, priv.d, priv.n)

    def rsa_encrypt_blocks(self, pub: RsaPublicKey, data: bytes) -> List[int]:
        """
        Raw RSA over a byte string, chunked into input blocks

        One call books a single asymmetric encryption.

        Args:
            pub: Target public key
            data: Plaintext bytes

        Returns:
            One ciphertext integer per input block
        """
        if not data:
            raise ValueError("data must be non-empty")
        self.counter.ae += 1
        size = pub.block_bytes(self.input_block_bits)
        return [
            pow(int.from_bytes(data[i:i + size], "big"), pub.e, pub.n)
            for i in range(0, len(data), size)
        ]

    def rsa_decrypt_blocks(self, priv: RsaPrivateKey, blocks: List[int], length: int) -> bytes:
        """
        Inverse of rsa_encrypt_blocks

        Args:
            priv: Target private key
            blocks: Ciphertext integers
            length: Expected plaintext length in bytes

        Returns:
            Plaintext bytes

        Raises:
            DecryptFailure: Block count or block contents do not fit `length`
            RangeError: A block is outside [0, n)
        """
        self.counter.ad += 1
        size = priv.block_bytes(self.input_block_bits)
        expected_blocks = -(-length // size)
        if length <= 0 or len(blocks) != expected_blocks:
            raise DecryptFailure(f"expected {expected_blocks} RSA blocks, got {len(blocks)}")

        out = bytearray()
        remaining = length
        for c in blocks:
            if not 0 <= c < priv.n:
                raise RangeError("ciphertext block outside [0, n)")
            chunk = min(size, remaining)
            m = pow(c, priv.d, priv.n)
            if m >= 1 << (8 * chunk):
                raise DecryptFailure("RSA block does not decode to the expected width")
            out += m.to_bytes(chunk, "big")
            remaining -= chunk
        return bytes(out)

    # ------------------------------------------------------------------
    # Digests
    # ------------------------------------------------------------------

    def hash(self, data: bytes) -> bytes:
        """SHA-256"""
        self.counter.h += 1
        digest = hashes.Hash(hashes.SHA256())
        digest.update(data)
        return digest.finalize()

    def hmac(self, key: SymKey, data: bytes) -> bytes:
        """HMAC-SHA256"""
        self.counter.hmac += 1
        mac = crypto_hmac.HMAC(key.material, hashes.SHA256())
        mac.update(data)
        return mac.finalize()

    # ------------------------------------------------------------------
    # Fresh values
    # ------------------------------------------------------------------

    def new_en_nonce(self) -> Nonce:
        nonce = Nonce(value=self.rng.random_bytes(NONCE_BYTES), kind=NonceKind.EN)
        self.issued.append(nonce)
        return nonce

    def new_or_nonce(self, modulus: int) -> Nonce:
        """
        Authorization nonce usable as an RSA plaintext under `modulus`

        Values 0 and 1 are redrawn: they void the multiplicative check.
        """
        bound = min(1 << (8 * NONCE_BYTES), modulus)
        while True:
            value = self.rng.randbelow(bound)
            if value > 1:
                break
        nonce = Nonce.from_int(value, NonceKind.OR)
        self.issued.append(nonce)
        return nonce

    def new_session_key(self) -> SymKey:
        return SymKey.generate(self.rng)
