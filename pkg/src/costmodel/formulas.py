"""
Closed-form communication and computation costs

Bracketed message lengths are block ceilings: a symmetric item of x bits
costs 128*ceil(x/128) and an RSA item 2544*ceil(x/2544). Payload items are
counted; headers are not. The Kerberos baseline is analytic only.
"""

import math
from typing import Dict

from pydantic import BaseModel, Field, model_validator

from src.crypto import DIGEST_BITS, OpCounter, Protocol
from src.errors import DomainError
from src.wire import MessageTag, package_booked_bits, rsa_booked_bits, sym_booked_bits

SECURITY_BITS = 128
KERBEROS_BITS_PER_CLIENT = 6080
KERBEROS_LABEL = "KERBEROS"


class OpCounts(BaseModel):
    """Operation counts, including the Kerberos symmetric operations"""

    se: int = Field(0, ge=0)
    ae: int = Field(0, ge=0)
    ad: int = Field(0, ge=0)
    h: int = Field(0, ge=0)
    hmac: int = Field(0, ge=0)
    kse: int = Field(0, ge=0, description="Kerberos symmetric encryptions")
    ksd: int = Field(0, ge=0, description="Kerberos symmetric decryptions")

    @classmethod
    def from_counter(cls, counter: OpCounter) -> "OpCounts":
        return cls(**counter.model_dump())

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(**{k: getattr(self, k) + getattr(other, k) for k in OpCounts.model_fields})

    def as_dict(self) -> Dict[str, int]:
        return self.model_dump()

    def nonzero(self) -> Dict[str, int]:
        return {k: v for k, v in self.model_dump().items() if v}

    @property
    def total(self) -> int:
        return sum(self.model_dump().values())


class CommCost(BaseModel):
    """Exact bit count with a per-message breakdown"""

    bits: int = Field(..., ge=0)
    breakdown: Dict[str, int] = Field(default_factory=dict, description="Message label -> bits")

    @model_validator(mode="after")
    def _breakdown_sums(self) -> "CommCost":
        if sum(self.breakdown.values()) != self.bits:
            raise ValueError(f"breakdown sums to {sum(self.breakdown.values())}, not {self.bits}")
        return self

    @property
    def byte_count(self) -> int:
        return self.bits // 8


class CompCost(BaseModel):
    """Operation counts with a per-role breakdown"""

    counts: OpCounts
    roles: Dict[str, OpCounts] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _roles_sum(self) -> "CompCost":
        total = OpCounts()
        for counts in self.roles.values():
            total = total + counts
        if self.roles and total != self.counts:
            raise ValueError(f"role breakdown {total.nonzero()} != counts {self.counts.nonzero()}")
        return self


class WorkFactor(BaseModel):
    """Brute-force effort to forge an accepted request, as log2(operations)"""

    log2_ops: float = Field(..., ge=SECURITY_BITS)


def _require(nc: int, minimum: int) -> None:
    if isinstance(nc, bool) or not isinstance(nc, int) or nc < minimum:
        raise DomainError(f"nc must be an integer >= {minimum}, got {nc!r}")


def request_bits(nc: int) -> int:
    """Encrypted request: client list, target id, EnNonce and timestamp"""
    return sym_booked_bits(32 * nc + 192)


def rsa_bracket_bits(nc: int) -> int:
    """128-bit-aligned length of the EncAuthVeriToken"""
    return sym_booked_bits(rsa_booked_bits(SECURITY_BITS * nc))


def message_count(protocol: Protocol, nc: int) -> int:
    """Messages in one honest execution"""
    _require(nc, 2)
    return 3 + 2 * nc if protocol is Protocol.HGAKA else 2 * nc


def comm_hgaka(nc: int) -> CommCost:
    """
    HGAKA communication cost

    Args:
        nc: Group size, at least 2

    Returns:
        256(3nc-2) + [request] + [EncAuthVeriToken] + 1536 bits
    """
    _require(nc, 2)
    share = 2 * SECURITY_BITS
    breakdown = {
        MessageTag.HGAKA_MSG1.label: request_bits(nc),
        MessageTag.HGAKA_MSG2.label: sym_booked_bits(2 * SECURITY_BITS),
        MessageTag.HGAKA_CHAIN.label: DIGEST_BITS * nc,
        MessageTag.HGAKA_MSG6.label: DIGEST_BITS + sym_booked_bits(2 * SECURITY_BITS),
        MessageTag.HGAKA_MSG7.label: (
            share * (nc - 1) + sym_booked_bits(3 * SECURITY_BITS) + package_booked_bits(nc) + DIGEST_BITS
        ),
        MessageTag.HGAKA_SHARE.label: share * (nc - 1),
    }
    bits = 256 * (3 * nc - 2) + request_bits(nc) + rsa_bracket_bits(nc) + 1536
    return CommCost(bits=bits, breakdown=breakdown)


def comm_hga(nc: int) -> CommCost:
    """
    HGA communication cost

    Args:
        nc: Group size, at least 2

    Returns:
        3056(nc-1) + 2544nc + [request] + [EncAuthVeriToken] + 512 bits
    """
    _require(nc, 2)
    token = rsa_booked_bits(SECURITY_BITS)
    delivery = sym_booked_bits(2 * SECURITY_BITS)
    breakdown = {
        MessageTag.PRE_HGA.label: token * (nc - 1),
        MessageTag.HGA_MSG1.label: request_bits(nc) + token * nc + package_booked_bits(nc) + DIGEST_BITS,
        MessageTag.HGA_MSG2.label: sym_booked_bits(SECURITY_BITS) + delivery * (nc - 1),
        MessageTag.HGA_SHARE.label: delivery * (nc - 1),
    }
    bits = 3056 * (nc - 1) + 2544 * nc + request_bits(nc) + rsa_bracket_bits(nc) + 512
    return CommCost(bits=bits, breakdown=breakdown)


def comm_kerberos(nc: int) -> CommCost:
    _require(nc, 1)
    bits = KERBEROS_BITS_PER_CLIENT * nc
    return CommCost(bits=bits, breakdown={KERBEROS_LABEL: bits})


def comm(protocol: Protocol, nc: int) -> CommCost:
    return comm_hgaka(nc) if protocol is Protocol.HGAKA else comm_hga(nc)


def comp_hgaka(nc: int) -> CompCost:
    """8 SE + AE + 2nc(SE + HMAC) + H, split over leader, other members and AS"""
    _require(nc, 2)
    roles = {
        "leader": OpCounts(se=4, hmac=1),
        "non_leader": OpCounts(se=nc - 1, hmac=nc - 1),
        "server": OpCounts(se=5 + nc, ae=1, hmac=nc, h=1),
    }
    return CompCost(counts=OpCounts(se=8 + 2 * nc, ae=1, hmac=2 * nc, h=1), roles=roles)


def comp_hga(nc: int) -> CompCost:
    """(4 + 2nc) SE + (1 + nc) AE + AD + H, split over leader, other members and target"""
    _require(nc, 2)
    roles = {
        "leader": OpCounts(se=2, ae=1),
        "non_leader": OpCounts(se=nc - 1, ae=nc - 1),
        "target": OpCounts(se=3 + nc, ae=1, ad=1, h=1),
    }
    return CompCost(counts=OpCounts(se=4 + 2 * nc, ae=1 + nc, ad=1, h=1), roles=roles)


def comp_kerberos(nc: int) -> CompCost:
    """Per client: one AS exchange (2 KSE + KSD) and two ticket exchanges (5 KSE + 6 KSD each)"""
    _require(nc, 1)
    roles = {
        "as_exchange": OpCounts(kse=2 * nc, ksd=nc),
        "ticket_exchanges": OpCounts(kse=10 * nc, ksd=12 * nc),
    }
    return CompCost(counts=OpCounts(kse=12 * nc, ksd=13 * nc), roles=roles)


def comp(protocol: Protocol, nc: int) -> CompCost:
    return comp_hgaka(nc) if protocol is Protocol.HGAKA else comp_hga(nc)


def work_factor(protocol: Protocol, nc: int) -> WorkFactor:
    """
    Brute-force work factor

    HGAKA requires guessing every member's HMAC contribution, so the effort
    grows as nc * 2^128. HGA requires either the session key or the AS
    package key: 2^128 + 2^128.

    Raises:
        DomainError: nc outside the protocol's range
    """
    if protocol is Protocol.HGAKA:
        _require(nc, 2)
        return WorkFactor(log2_ops=SECURITY_BITS + math.log2(nc))
    _require(nc, 1)
    return WorkFactor(log2_ops=SECURITY_BITS + 1)
