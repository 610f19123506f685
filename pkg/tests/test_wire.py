"""
Tests for the wire codec, payload layouts and transcript dumps
"""

import struct

import pytest
from pydantic import ValidationError

from src.config import settings
from src.crypto import DeterministicRandom, Nonce, NonceKind, Protocol
from src.errors import MalformedMessage
from src.wire import (
    ClientList,
    Direction,
    ItemKind,
    MessageTag,
    PayloadItem,
    ProtocolMessage,
    dump_transcript,
    load_transcript,
    package_booked_bits,
    parse,
    payload_bits,
    rsa_booked_bits,
    serialize,
    sym_booked_bits,
    wire_bits,
)
from src.wire.payloads import ClientShareBody, RequestBody, TargetPackageBody


@pytest.fixture
def msg6() -> ProtocolMessage:
    return ProtocolMessage(
        tag=MessageTag.HGAKA_MSG6,
        direction=Direction.REQ,
        sender=103,
        receiver=1,
        items=(PayloadItem.mac(bytes(32)), PayloadItem.sym(bytes(range(48)), 288))
    )


# Item-kind sequences each tag accepts; "*" repeats the previous kind 0..3 extra times
_CORPUS_SHAPES = {
    MessageTag.HGAKA_MSG1: ((Direction.REQ,), "S"),
    MessageTag.HGAKA_MSG2: ((Direction.RES,), "S"),
    MessageTag.HGAKA_CHAIN: ((Direction.REQ, Direction.RES), "M"),
    MessageTag.HGAKA_MSG6: ((Direction.REQ,), "MS"),
    MessageTag.HGAKA_MSG7: ((Direction.RES,), "SSS*H"),
    MessageTag.HGAKA_SHARE: ((Direction.RES,), "S"),
    MessageTag.PRE_HGA: ((Direction.REQ,), "R"),
    MessageTag.HGA_MSG1: ((Direction.REQ,), "SRR*SH"),
    MessageTag.HGA_MSG2: ((Direction.RES,), "SS*"),
    MessageTag.HGA_SHARE: ((Direction.RES,), "S"),
}


def _random_item(kind: str, rng: DeterministicRandom) -> PayloadItem:
    if kind == "S":
        return PayloadItem.sym(rng.random_bytes(16 * (1 + rng.randbelow(4))), 1 + rng.randbelow(512))
    if kind == "R":
        return PayloadItem.rsa([rng.randbelow(1 << 512)], width=64)
    if kind == "H":
        return PayloadItem.digest(rng.random_bytes(32))
    return PayloadItem.mac(rng.random_bytes(32))


def _random_message(rng: DeterministicRandom) -> ProtocolMessage:
    tags = list(_CORPUS_SHAPES)
    tag = tags[rng.randbelow(len(tags))]
    directions, shape = _CORPUS_SHAPES[tag]
    kinds = []
    for letter in shape:
        if letter == "*":
            kinds += [kinds[-1]] * rng.randbelow(4)
        else:
            kinds.append(letter)
    return ProtocolMessage(
        tag=tag,
        direction=directions[rng.randbelow(len(directions))],
        hop=rng.randbelow(1 << 16),
        sender=rng.randbelow(1 << 32),
        receiver=rng.randbelow(1 << 32),
        items=tuple(_random_item(kind, rng) for kind in kinds)
    )


def test_header_layout(msg6: ProtocolMessage) -> None:
    """Test the 12-byte big-endian header"""
    raw = serialize(msg6)
    assert raw[:12] == struct.pack(">BBHII", 6, 0, 0, 103, 1)
    assert raw[12:19] == struct.pack(">BIH", ItemKind.HMAC, 256, 32)


def test_parse_inverts_serialize(msg6: ProtocolMessage) -> None:
    """Test parse(serialize(m)) == m"""
    assert parse(serialize(msg6)) == msg6


def test_random_corpus_survives_the_codec() -> None:
    """Test parse inverts serialize over 300 random well-shaped messages"""
    rng = DeterministicRandom("corpus")
    for _ in range(300):
        msg = _random_message(rng)
        raw = serialize(msg)
        assert parse(raw) == msg
        assert wire_bits(msg) == 8 * len(raw)
        assert payload_bits(msg) == sum(item.booked_bits for item in msg.items)


def test_parse_fuzz_only_raises_malformed(msg6: ProtocolMessage) -> None:
    """Test 10^4 random, tag-seeded and bit-flipped buffers never escape MalformedMessage"""
    rng = DeterministicRandom("fuzz")
    tags = list(MessageTag)
    valid = serialize(msg6)
    for i in range(10_000):
        mode = i % 3
        if mode == 0:
            raw = rng.random_bytes(rng.randbelow(200))
        elif mode == 1:
            tag = tags[rng.randbelow(len(tags))]
            header = struct.pack(">BBHII", tag, rng.randbelow(3), rng.randbelow(8), 103, 1)
            raw = header + rng.random_bytes(rng.randbelow(120))
        else:
            flipped = bytearray(valid)
            flipped[rng.randbelow(len(flipped))] ^= 1 << rng.randbelow(8)
            raw = bytes(flipped[:rng.randbelow(len(flipped) + 1)])
        try:
            parse(raw)
        except MalformedMessage:
            continue


def test_length_accounting(msg6: ProtocolMessage) -> None:
    """Test booked bits exclude headers while wire bits count every byte"""
    assert payload_bits(msg6) == 256 + 384
    assert wire_bits(msg6) == 8 * (12 + 7 + 32 + 7 + 48)


def test_booked_bit_helpers() -> None:
    """Test block rounding of symmetric and RSA items"""
    assert sym_booked_bits(288) == 384
    assert sym_booked_bits(128) == 128
    assert sym_booked_bits(129) == 256
    assert rsa_booked_bits(128) == 2544
    assert rsa_booked_bits(2560) == 5088
    assert package_booked_bits(3) == 2688


def test_rsa_block_size_comes_from_settings(monkeypatch) -> None:
    """Test the RSA input block size follows configuration"""
    monkeypatch.setattr(settings, "RSA_INPUT_BLOCK_BITS", 1024)
    assert rsa_booked_bits(128) == 1024
    assert rsa_booked_bits(1025) == 2048


def test_truncated_buffers(msg6: ProtocolMessage) -> None:
    """Test short headers and overflowing item lengths"""
    raw = serialize(msg6)
    with pytest.raises(MalformedMessage):
        parse(raw[:5])
    with pytest.raises(MalformedMessage):
        parse(raw[:-1])
    with pytest.raises(MalformedMessage):
        parse(raw[:15])


def test_unknown_tag_and_kind() -> None:
    """Test unknown tag bytes and item kinds"""
    with pytest.raises(MalformedMessage):
        parse(struct.pack(">BBHII", 99, 0, 0, 1, 2))
    bad_kind = struct.pack(">BBHII", 1, 0, 0, 1, 2) + struct.pack(">BIH", 9, 128, 16) + bytes(16)
    with pytest.raises(MalformedMessage):
        parse(bad_kind)


def test_shape_is_checked_per_tag() -> None:
    """Test item sequences and directions the tag does not allow"""
    wrong_items = ProtocolMessage(
        tag=MessageTag.HGAKA_MSG6,
        direction=Direction.REQ,
        sender=103,
        receiver=1,
        items=(PayloadItem.sym(bytes(16), 128),)
    )
    with pytest.raises(MalformedMessage):
        parse(serialize(wrong_items))

    wrong_direction = ProtocolMessage(
        tag=MessageTag.HGAKA_MSG1,
        direction=Direction.RES,
        sender=103,
        receiver=1,
        items=(PayloadItem.sym(bytes(16), 128),)
    )
    with pytest.raises(MalformedMessage):
        parse(serialize(wrong_direction))


def test_chain_accepts_both_directions() -> None:
    """Test the HM chain message travels both ways"""
    for direction in Direction:
        msg = ProtocolMessage(
            tag=MessageTag.HGAKA_CHAIN,
            direction=direction,
            hop=2,
            sender=101,
            receiver=102,
            items=(PayloadItem.mac(bytes(32)),)
        )
        assert parse(serialize(msg)).hop == 2


def test_item_validation() -> None:
    """Test block alignment and digest widths"""
    with pytest.raises(ValidationError):
        PayloadItem.sym(bytes(15), 120)
    with pytest.raises(ValidationError):
        PayloadItem.digest(bytes(31))
    with pytest.raises(ValidationError):
        PayloadItem(kind=ItemKind.RSA, booked_bits=2544, data=b"")


def test_rsa_item_blocks() -> None:
    """Test fixed-width RSA blocks"""
    item = PayloadItem.rsa([1, 2, 3], width=8, plain_bits=384)
    assert len(item.data) == 24
    assert item.booked_bits == 2544
    assert item.rsa_blocks(8) == [1, 2, 3]
    with pytest.raises(ValueError):
        item.rsa_blocks(7)


def test_tag_metadata() -> None:
    """Test labels and protocol membership"""
    assert MessageTag.HGAKA_MSG1.label == "HGAKA-MSG1"
    assert MessageTag.HGAKA_SHARE.protocol is Protocol.HGAKA
    assert MessageTag.PRE_HGA.protocol is Protocol.HGA
    assert MessageTag.HGA_MSG2.protocol is Protocol.HGA


def test_client_list_chain_path() -> None:
    """Test the HM chain walks from the leader down and back"""
    clients = ClientList(ids=[1, 2, 3])
    assert clients.leader == 3
    assert clients.chain_path() == [3, 2, 1, 3]
    with pytest.raises(ValidationError):
        ClientList(ids=[1, 1])


def test_request_body() -> None:
    """Test ID list, target, nonce and timestamp layout"""
    body = RequestBody(
        clients=[101, 102, 103],
        target=900,
        en_nonce=Nonce(value=bytes(range(16)), kind=NonceKind.EN),
        ts=4242
    )
    data = body.to_bytes()
    assert len(data) * 8 == body.plain_bits == 32 * 3 + 192
    assert RequestBody.from_bytes(data) == body
    with pytest.raises(MalformedMessage):
        RequestBody.from_bytes(data[:-1])


def test_fixed_bodies_reject_wrong_length() -> None:
    """Test nonce pairs and target packages"""
    with pytest.raises(MalformedMessage):
        ClientShareBody.from_bytes(bytes(31))
    package = TargetPackageBody.from_bytes(bytes(32 + 128), 64)
    assert len(package.veri_token) == 128
    with pytest.raises(MalformedMessage):
        TargetPackageBody.from_bytes(bytes(32 + 100), 64)


def test_transcript_dump_format() -> None:
    """Test `<time> <hex>` lines"""
    text = dump_transcript([(0, b"\x01\x02"), (10, b"\xff")])
    assert text == "0 0102\n10 ff\n"
    assert load_transcript(text + "\n") == [(0, b"\x01\x02"), (10, b"\xff")]
    with pytest.raises(MalformedMessage):
        load_transcript("12 zz")
