"""
Protocol Messages - tagged wire messages for HGAKA and HGA

A message is a fixed header (tag, direction, hop, sender, receiver) plus an
ordered tuple of payload items. Each item records the bit length the cost
tables book for it, next to the real bytes it carries.
"""

from enum import Enum, IntEnum
import math
from typing import Annotated, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import settings
from src.crypto import DIGEST_BITS, Protocol

U32_MAX = 0xFFFFFFFF
U16_MAX = 0xFFFF

SYM_BLOCK_BITS = 128

EntityId = Annotated[int, Field(ge=0, le=U32_MAX, description="32-bit entity identifier")]
Timestamp = Annotated[int, Field(ge=0, le=U32_MAX, description="32-bit logical milliseconds")]


class MessageTag(IntEnum):
    """Message type; the tag byte is authoritative when parsing"""
    HGAKA_MSG1 = 1
    HGAKA_MSG2 = 2
    HGAKA_CHAIN = 3
    HGAKA_MSG6 = 6
    HGAKA_MSG7 = 7
    HGAKA_SHARE = 8
    PRE_HGA = 16
    HGA_MSG1 = 17
    HGA_MSG2 = 18
    HGA_SHARE = 19

    @property
    def protocol(self) -> Protocol:
        return Protocol.HGA if self >= MessageTag.PRE_HGA else Protocol.HGAKA

    @property
    def label(self) -> str:
        return self.name.replace("_", "-")


class Direction(IntEnum):
    """Request or response"""
    REQ = 0
    RES = 1


class ItemKind(IntEnum):
    """Payload item family"""
    SYM = 1
    RSA = 2
    HASH = 3
    HMAC = 4


def sym_booked_bits(plain_bits: int) -> int:
    """Symmetric item length in whole 128-bit blocks"""
    return SYM_BLOCK_BITS * math.ceil(plain_bits / SYM_BLOCK_BITS)


def rsa_booked_bits(plain_bits: int) -> int:
    """RSA item length in whole input blocks (2544 bits by default)"""
    block = settings.RSA_INPUT_BLOCK_BITS
    return block * math.ceil(plain_bits / block)


def package_booked_bits(nc: int) -> int:
    """EK_D1[EK_GD1[SK] || EncAuthVeriToken] for a group of nc clients"""
    return sym_booked_bits(sym_booked_bits(128) + rsa_booked_bits(128 * nc))


class PayloadItem(BaseModel):
    """One cryptographic item of a message payload"""

    kind: ItemKind = Field(..., description="Item family")
    booked_bits: int = Field(..., ge=0, le=U32_MAX, description="Length booked by the cost tables")
    data: bytes = Field(..., description="Serialized item bytes")

    model_config = ConfigDict(frozen=True)

    @field_validator("data")
    @classmethod
    def _fits_length_prefix(cls, value: bytes) -> bytes:
        if len(value) > U16_MAX:
            raise ValueError(f"item of {len(value)} bytes exceeds the 16-bit length prefix")
        return value

    @model_validator(mode="after")
    def _block_aligned(self) -> "PayloadItem":
        if self.kind is ItemKind.SYM and (not self.data or len(self.data) % 16):
            raise ValueError("symmetric item must be a non-empty multiple of 128 bits")
        if self.kind in (ItemKind.HASH, ItemKind.HMAC) and len(self.data) * 8 != DIGEST_BITS:
            raise ValueError("digest item must be 256 bits")
        if self.kind is ItemKind.RSA and not self.data:
            raise ValueError("RSA item must be non-empty")
        return self

    @classmethod
    def sym(cls, ciphertext: bytes, plain_bits: int) -> "PayloadItem":
        return cls(kind=ItemKind.SYM, booked_bits=sym_booked_bits(plain_bits), data=ciphertext)

    @classmethod
    def rsa(cls, blocks: List[int], width: int, plain_bits: int = 128) -> "PayloadItem":
        """
        Raw RSA ciphertext blocks at fixed width

        Args:
            blocks: Ciphertext integers
            width: Bytes per block (modulus byte length)
            plain_bits: Plaintext length behind the blocks
        """
        data = b"".join(c.to_bytes(width, "big") for c in blocks)
        return cls(kind=ItemKind.RSA, booked_bits=rsa_booked_bits(plain_bits), data=data)

    @classmethod
    def digest(cls, value: bytes) -> "PayloadItem":
        return cls(kind=ItemKind.HASH, booked_bits=DIGEST_BITS, data=value)

    @classmethod
    def mac(cls, value: bytes) -> "PayloadItem":
        return cls(kind=ItemKind.HMAC, booked_bits=DIGEST_BITS, data=value)

    def rsa_blocks(self, width: int) -> List[int]:
        """Split an RSA item back into ciphertext integers"""
        if len(self.data) % width:
            raise ValueError(f"RSA item of {len(self.data)} bytes is not a multiple of {width}")
        return [
            int.from_bytes(self.data[i:i + width], "big")
            for i in range(0, len(self.data), width)
        ]


class ProtocolMessage(BaseModel):
    """Immutable tagged protocol message"""

    tag: MessageTag = Field(..., description="Message type")
    direction: Direction = Field(..., description="Request or response")
    hop: int = Field(0, ge=0, le=U16_MAX, description="Chain or client index for generic-NC messages")
    sender: EntityId
    receiver: EntityId
    items: Tuple[PayloadItem, ...] = Field(default=(), description="Payload items in protocol order")

    model_config = ConfigDict(frozen=True)

    @property
    def protocol(self) -> Protocol:
        return self.tag.protocol

    def describe(self) -> str:
        return f"{self.tag.label}[{self.hop}] {self.sender}->{self.receiver}"


class ClientList(BaseModel):
    """
    Ordered group members

    Index 0 is the deepest chain client; the last element is the leader.
    """

    ids: List[EntityId] = Field(..., min_length=1)

    @field_validator("ids")
    @classmethod
    def _unique(cls, value: List[int]) -> List[int]:
        if len(set(value)) != len(value):
            raise ValueError("client list contains duplicates")
        return value

    @property
    def leader(self) -> int:
        return self.ids[-1]

    @property
    def nc(self) -> int:
        return len(self.ids)

    def chain_path(self) -> List[int]:
        """Nodes visited by the HM chain: leader, clients[nc-2], ..., clients[0], leader"""
        return list(reversed(self.ids)) + [self.leader]
