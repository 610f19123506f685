"""
Plaintext layouts carried inside encrypted items

Decoders raise MalformedMessage; actors report that as a decryption failure
because a wrong key surfaces the same way.
"""

import struct
from typing import ClassVar, List

from pydantic import BaseModel, Field

from src.crypto import Nonce, NonceKind, SymKey
from src.crypto.keys import NONCE_BYTES, SYM_KEY_BYTES
from src.errors import MalformedMessage
from src.wire.messages import EntityId, Timestamp

_ID = struct.Struct(">I")


def _exact(data: bytes, size: int, what: str) -> None:
    if len(data) != size:
        raise MalformedMessage(f"{what}: expected {size} bytes, got {len(data)}")


class RequestBody(BaseModel):
    """ID_C-List || ID_D1 || EnNonce1 || Ts (HGAKA Msg1 and the ESK item of HGA Msg1)"""

    clients: List[EntityId] = Field(..., min_length=1)
    target: EntityId
    en_nonce: Nonce
    ts: Timestamp

    @property
    def plain_bits(self) -> int:
        return 32 * len(self.clients) + 192

    def to_bytes(self) -> bytes:
        ids = b"".join(_ID.pack(i) for i in self.clients)
        return ids + _ID.pack(self.target) + self.en_nonce.value + _ID.pack(self.ts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RequestBody":
        fixed = 4 + NONCE_BYTES + 4
        if len(data) < fixed + 4 or (len(data) - fixed) % 4:
            raise MalformedMessage(f"request body of {len(data)} bytes")
        count = (len(data) - fixed) // 4
        ids = [_ID.unpack_from(data, 4 * i)[0] for i in range(count + 1)]
        nonce_at = 4 * (count + 1)
        return cls(
            clients=ids[:-1],
            target=ids[-1],
            en_nonce=Nonce(value=data[nonce_at:nonce_at + NONCE_BYTES], kind=NonceKind.EN),
            ts=_ID.unpack_from(data, nonce_at + NONCE_BYTES)[0]
        )


def pack_nonces(*nonces: Nonce) -> bytes:
    return b"".join(n.value for n in nonces)


def unpack_nonces(data: bytes, *kinds: NonceKind) -> List[Nonce]:
    """Split fixed-width nonces, e.g. EnNonce1 || EnNonce2"""
    _exact(data, NONCE_BYTES * len(kinds), "nonce tuple")
    return [
        Nonce(value=data[i * NONCE_BYTES:(i + 1) * NONCE_BYTES], kind=kind)
        for i, kind in enumerate(kinds)
    ]


class ClientShareBody(BaseModel):
    """OrNonce_Ci || EnNonce_i"""

    or_nonce: Nonce
    en_nonce: Nonce

    plain_bits: ClassVar[int] = 256

    def to_bytes(self) -> bytes:
        return pack_nonces(self.or_nonce, self.en_nonce)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClientShareBody":
        or_nonce, en_nonce = unpack_nonces(data, NonceKind.OR, NonceKind.EN)
        return cls(or_nonce=or_nonce, en_nonce=en_nonce)


class LeaderShareBody(BaseModel):
    """SK || OrNonce_leader || EnNonce3"""

    session_key: SymKey
    or_nonce: Nonce
    en_nonce: Nonce

    plain_bits: ClassVar[int] = 384

    def to_bytes(self) -> bytes:
        return self.session_key.material + pack_nonces(self.or_nonce, self.en_nonce)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LeaderShareBody":
        _exact(data, SYM_KEY_BYTES + 2 * NONCE_BYTES, "leader share")
        or_nonce, en_nonce = unpack_nonces(data[SYM_KEY_BYTES:], NonceKind.OR, NonceKind.EN)
        return cls(
            session_key=SymKey(material=data[:SYM_KEY_BYTES]),
            or_nonce=or_nonce,
            en_nonce=en_nonce
        )


class KeyDeliveryBody(BaseModel):
    """SK || EnNonce_i delivered under an OrNonce key (HGA shares)"""

    session_key: SymKey
    en_nonce: Nonce

    plain_bits: ClassVar[int] = 256

    def to_bytes(self) -> bytes:
        return self.session_key.material + self.en_nonce.value

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyDeliveryBody":
        _exact(data, SYM_KEY_BYTES + NONCE_BYTES, "key delivery")
        return cls(
            session_key=SymKey(material=data[:SYM_KEY_BYTES]),
            en_nonce=Nonce(value=data[SYM_KEY_BYTES:], kind=NonceKind.EN)
        )


class TargetPackageBody(BaseModel):
    """EK_GD1[SK] || EncAuthVeriToken bytes, sealed under K_D1"""

    sealed_key: bytes = Field(..., description="EK_GD1[SK]")
    veri_token: bytes = Field(..., description="Fixed-width raw RSA blocks")

    def to_bytes(self) -> bytes:
        return self.sealed_key + self.veri_token

    def digest_input(self) -> bytes:
        """Input of the integrity hash H(EK_GD1[SK], EncAuthVeriToken)"""
        return self.sealed_key + self.veri_token

    @classmethod
    def from_bytes(cls, data: bytes, width: int) -> "TargetPackageBody":
        sealed = 2 * SYM_KEY_BYTES
        token_len = len(data) - sealed
        if token_len <= 0 or token_len % width:
            raise MalformedMessage(f"target package of {len(data)} bytes")
        return cls(sealed_key=data[:sealed], veri_token=data[sealed:])
