"""
Group tokens

HmChainToken is the nested-HMAC token the AS checks. EncAuthVeriToken and
EncGroupAuthenticator carry raw RSA encryptions of the OrNonces; the target
compares E(prod OrNonce) with the product of the submitted ciphertexts.
"""

import math
from typing import List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field
import structlog

from src.crypto import (
    CryptoEngine,
    Nonce,
    NonceKind,
    RsaKeyPair,
    RsaPrivateKey,
    RsaPublicKey,
    constant_time_equal,
)
from src.crypto.keys import NONCE_BYTES
from src.errors import DecryptFailure, RangeError
from src.tokens.verification import KeyLookup, hm_fold

logger = structlog.get_logger()


class HmChainToken(BaseModel):
    """HMAC(K_C1, HMAC(K_C2, ... HMAC(K_leader, seed)...))"""

    value: bytes = Field(..., description="256-bit tag")
    chain_order: Tuple[int, ...] = Field(..., description="ClientList that produced the token")
    seed: Nonce = Field(..., description="EnNonce2 from the AS")

    model_config = ConfigDict(frozen=True)

    @classmethod
    def fold(
        cls,
        engine: CryptoEngine,
        chain: Sequence[int],
        keys: KeyLookup,
        seed: Nonce
    ) -> "HmChainToken":
        return cls(value=hm_fold(engine, chain, keys, seed), chain_order=tuple(chain), seed=seed)


class EncAuthVeriToken(BaseModel):
    """Raw RSA encryption of OrNonce_C1 || ... || OrNonce_CNC"""

    blocks: Tuple[int, ...] = Field(..., min_length=1)
    nc: int = Field(..., ge=1)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def issue(cls, engine: CryptoEngine, pub: RsaPublicKey, or_nonces: Sequence[Nonce]) -> "EncAuthVeriToken":
        """Encrypt the concatenated OrNonces (one asymmetric operation)"""
        plaintext = b"".join(n.value for n in or_nonces)
        return cls(blocks=tuple(engine.rsa_encrypt_blocks(pub, plaintext)), nc=len(or_nonces))

    def open(self, engine: CryptoEngine, priv: RsaPrivateKey) -> List[Nonce]:
        """
        Decrypt and split into OrNonces

        Raises:
            DecryptFailure: The blocks do not decode to nc 128-bit values
        """
        try:
            plaintext = engine.rsa_decrypt_blocks(priv, list(self.blocks), NONCE_BYTES * self.nc)
        except RangeError as e:
            raise DecryptFailure(str(e)) from e
        return [
            Nonce(value=plaintext[i:i + NONCE_BYTES], kind=NonceKind.OR)
            for i in range(0, len(plaintext), NONCE_BYTES)
        ]

    def to_bytes(self, width: int) -> bytes:
        return b"".join(c.to_bytes(width, "big") for c in self.blocks)

    @classmethod
    def from_bytes(cls, data: bytes, width: int, nc: int) -> "EncAuthVeriToken":
        if not data or len(data) % width:
            raise DecryptFailure(f"veri token of {len(data)} bytes is not a multiple of {width}")
        blocks = tuple(int.from_bytes(data[i:i + width], "big") for i in range(0, len(data), width))
        return cls(blocks=blocks, nc=nc)


class EncGroupAuthenticator(BaseModel):
    """Per-client tokens E(OrNonce_Ci) in ClientList order"""

    tokens: Tuple[int, ...] = Field(..., min_length=1)

    model_config = ConfigDict(frozen=True)

    @property
    def nc(self) -> int:
        return len(self.tokens)


def build_group_authenticator(tokens: Sequence[int], pub: RsaPublicKey) -> EncGroupAuthenticator:
    """
    Assemble the authenticator

    Raises:
        RangeError: A token is outside [0, n)
    """
    for token in tokens:
        if not 0 <= token < pub.n:
            raise RangeError("group token outside [0, n)")
    return EncGroupAuthenticator(tokens=tuple(tokens))


def verify_against_nonces(
    engine: CryptoEngine,
    authenticator: EncGroupAuthenticator,
    or_nonces: Sequence[Nonce],
    pub: RsaPublicKey
) -> bool:
    """
    X = E(prod OrNonce_i mod n) against Y = prod token_i mod n

    Books one asymmetric encryption.
    """
    if authenticator.nc != len(or_nonces):
        return False
    values = [n.as_int() for n in or_nonces]
    product = math.prod(values)
    if 128 * len(values) <= pub.n.bit_length() - 1 and product >= pub.n:
        raise RangeError("OrNonce product exceeds the modulus")
    x = engine.rsa_raw_encrypt(pub, product % pub.n)
    y = math.prod(authenticator.tokens) % pub.n
    width = pub.byte_length
    return constant_time_equal(x.to_bytes(width, "big"), y.to_bytes(width, "big"))


class GroupVerification(BaseModel):
    """Outcome of the homomorphic check; truthy iff the group verified"""

    ok: bool
    or_nonces: Tuple[Nonce, ...] = Field(..., description="OrNonces opened from the veri token")

    model_config = ConfigDict(frozen=True)

    def __bool__(self) -> bool:
        return self.ok


def homomorphic_group_verify(
    engine: CryptoEngine,
    authenticator: EncGroupAuthenticator,
    veri_token: EncAuthVeriToken,
    keypair: RsaKeyPair
) -> GroupVerification:
    """
    Check every submitted token against the AS-issued OrNonces in one comparison

    Args:
        engine: Engine the RSA operations are booked to
        authenticator: Client-submitted tokens
        veri_token: AS-issued encryption of all OrNonces
        keypair: Target keypair

    Returns:
        The verdict plus the opened OrNonces, which the target reuses as
        delivery keys

    Raises:
        DecryptFailure: veri_token does not decode
        RangeError: The OrNonce product breaks the no-overflow precondition
    """
    or_nonces = veri_token.open(engine, keypair.private)
    ok = verify_against_nonces(engine, authenticator, or_nonces, keypair.public)
    logger.debug("Group authenticator checked", nc=authenticator.nc, ok=ok)
    return GroupVerification(ok=ok, or_nonces=tuple(or_nonces))
