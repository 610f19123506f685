"""
Message schemas, wire codec and transcript dump format
"""

from src.wire.codec import (
    dump_transcript,
    load_transcript,
    parse,
    payload_bits,
    serialize,
    wire_bits,
)
from src.wire.messages import (
    ClientList,
    Direction,
    EntityId,
    ItemKind,
    MessageTag,
    PayloadItem,
    ProtocolMessage,
    Timestamp,
    package_booked_bits,
    rsa_booked_bits,
    sym_booked_bits,
)

__all__ = [
    "ClientList",
    "Direction",
    "EntityId",
    "ItemKind",
    "MessageTag",
    "PayloadItem",
    "ProtocolMessage",
    "Timestamp",
    "dump_transcript",
    "load_transcript",
    "package_booked_bits",
    "parse",
    "payload_bits",
    "rsa_booked_bits",
    "serialize",
    "sym_booked_bits",
    "wire_bits",
]
