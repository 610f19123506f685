"""
Wire codec - bit-exact serialization, parsing and length accounting

Header (12 bytes, big-endian):
    tag u8 | direction u8 | hop u16 | sender u32 | receiver u32
Each payload item:
    kind u8 | booked_bits u32 | length u16 | data
Items run to the end of the buffer.
"""

import re
import struct
from typing import Dict, Iterable, List, Tuple

from pydantic import ValidationError

from src.errors import MalformedMessage
from src.wire.messages import (
    Direction,
    ItemKind,
    MessageTag,
    PayloadItem,
    ProtocolMessage,
)

_HEADER = struct.Struct(">BBHII")
_ITEM = struct.Struct(">BIH")

_KIND_LETTER = {
    ItemKind.SYM: "S",
    ItemKind.RSA: "R",
    ItemKind.HASH: "H",
    ItemKind.HMAC: "M",
}

# Allowed directions and item-kind sequences per tag
_SHAPES: Dict[MessageTag, Tuple[Tuple[Direction, ...], "re.Pattern[str]"]] = {
    MessageTag.HGAKA_MSG1: ((Direction.REQ,), re.compile(r"S")),
    MessageTag.HGAKA_MSG2: ((Direction.RES,), re.compile(r"S")),
    MessageTag.HGAKA_CHAIN: ((Direction.REQ, Direction.RES), re.compile(r"M")),
    MessageTag.HGAKA_MSG6: ((Direction.REQ,), re.compile(r"MS")),
    MessageTag.HGAKA_MSG7: ((Direction.RES,), re.compile(r"S{3,}H")),
    MessageTag.HGAKA_SHARE: ((Direction.RES,), re.compile(r"S")),
    MessageTag.PRE_HGA: ((Direction.REQ,), re.compile(r"R")),
    MessageTag.HGA_MSG1: ((Direction.REQ,), re.compile(r"SR{2,}SH")),
    MessageTag.HGA_MSG2: ((Direction.RES,), re.compile(r"S{2,}")),
    MessageTag.HGA_SHARE: ((Direction.RES,), re.compile(r"S")),
}


def serialize(msg: ProtocolMessage) -> bytes:
    """
    Encode a message

    Args:
        msg: Well-formed message

    Returns:
        Deterministic byte layout
    """
    parts = [_HEADER.pack(msg.tag, msg.direction, msg.hop, msg.sender, msg.receiver)]
    for item in msg.items:
        parts.append(_ITEM.pack(item.kind, item.booked_bits, len(item.data)))
        parts.append(item.data)
    return b"".join(parts)


def parse(raw: bytes) -> ProtocolMessage:
    """
    Decode and shape-check a message

    Args:
        raw: Wire bytes

    Returns:
        The message

    Raises:
        MalformedMessage: Truncation, unknown tag or kind, length overflow,
            or an item sequence the tag does not allow
    """
    if len(raw) < _HEADER.size:
        raise MalformedMessage(f"truncated header ({len(raw)} bytes)")
    tag_byte, direction_byte, hop, sender, receiver = _HEADER.unpack_from(raw, 0)
    try:
        tag = MessageTag(tag_byte)
        direction = Direction(direction_byte)
    except ValueError as e:
        raise MalformedMessage(str(e)) from e

    items: List[PayloadItem] = []
    offset = _HEADER.size
    while offset < len(raw):
        if len(raw) - offset < _ITEM.size:
            raise MalformedMessage(f"truncated item header at offset {offset}")
        kind_byte, booked_bits, length = _ITEM.unpack_from(raw, offset)
        offset += _ITEM.size
        if offset + length > len(raw):
            raise MalformedMessage(f"item length {length} overflows buffer at offset {offset}")
        try:
            items.append(PayloadItem(
                kind=ItemKind(kind_byte),
                booked_bits=booked_bits,
                data=raw[offset:offset + length]
            ))
        except (ValueError, ValidationError) as e:
            raise MalformedMessage(f"invalid item: {e}") from e
        offset += length

    directions, pattern = _SHAPES[tag]
    shape = "".join(_KIND_LETTER[item.kind] for item in items)
    if direction not in directions or not pattern.fullmatch(shape):
        raise MalformedMessage(f"{tag.label} cannot carry {direction.name} '{shape}'")

    try:
        return ProtocolMessage(
            tag=tag,
            direction=direction,
            hop=hop,
            sender=sender,
            receiver=receiver,
            items=tuple(items)
        )
    except ValidationError as e:
        raise MalformedMessage(str(e)) from e


def payload_bits(msg: ProtocolMessage) -> int:
    """Bits booked by the cost tables: itemized payload only, headers excluded"""
    return sum(item.booked_bits for item in msg.items)


def wire_bits(msg: ProtocolMessage) -> int:
    """Real serialized length in bits, headers included"""
    return 8 * len(serialize(msg))


def dump_transcript(entries: Iterable[Tuple[int, bytes]]) -> str:
    """
    Render (send time, raw message) pairs, one `<time> <hex>` line each
    """
    return "".join(f"{time} {raw.hex()}\n" for time, raw in entries)


def load_transcript(text: str) -> List[Tuple[int, bytes]]:
    """
    Inverse of dump_transcript

    Raises:
        MalformedMessage: A line is not `<time> <hex>`
    """
    entries = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            time_text, hex_text = line.split()
            entries.append((int(time_text), bytes.fromhex(hex_text)))
        except ValueError as e:
            raise MalformedMessage(f"transcript line {number}: {e}") from e
    return entries
