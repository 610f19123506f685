"""
Tests for the instrumented crypto engine and key material
"""

import hashlib
import hmac

import pytest
from pydantic import ValidationError

from src.crypto import (
    CryptoEngine,
    DeterministicRandom,
    KeySize,
    Nonce,
    NonceKind,
    OpCounter,
    Protocol,
    RsaKeyPair,
    SymKey,
    SystemRandomSource,
    generate_rsa_keypair,
)
from src.errors import DecryptFailure, PaddingError, RangeError


@pytest.fixture
def textbook() -> RsaKeyPair:
    """p=61, q=53 textbook keypair"""
    return RsaKeyPair(n=3233, e=17, d=413, p=61, q=53, insecure_test_keys=True)


@pytest.fixture(scope="module")
def full_keypair() -> RsaKeyPair:
    """3072-bit keypair from OS entropy"""
    return generate_rsa_keypair(KeySize.FULL_3072.bits, SystemRandomSource())


def test_textbook_rsa_vector(engine: CryptoEngine, textbook: RsaKeyPair) -> None:
    """Test 65^17 mod 3233 = 2790 and its inverse"""
    assert engine.rsa_raw_encrypt(textbook.public, 65) == 2790
    assert engine.rsa_raw_decrypt(textbook.private, 2790) == 65
    assert engine.counter.ae == 1
    assert engine.counter.ad == 1


def test_rsa_multiplicative_property(engine: CryptoEngine, textbook: RsaKeyPair) -> None:
    """Test E(a) * E(b) mod n = E(a * b mod n)"""
    pub = textbook.public
    a, b = 42, 77
    product = engine.rsa_raw_encrypt(pub, a) * engine.rsa_raw_encrypt(pub, b) % pub.n
    assert product == engine.rsa_raw_encrypt(pub, a * b % pub.n)


def test_rsa_multiplicative_property_random_pairs(engine: CryptoEngine, keypair: RsaKeyPair) -> None:
    """Test the identity over 1000 random pairs under the 512-bit test key"""
    rng = DeterministicRandom("pairs")
    pub = keypair.public
    for _ in range(1000):
        a, b = rng.randbelow(pub.n), rng.randbelow(pub.n)
        product = engine.rsa_raw_encrypt(pub, a) * engine.rsa_raw_encrypt(pub, b) % pub.n
        assert product == engine.rsa_raw_encrypt(pub, a * b % pub.n)
    assert engine.counter.ae == 3000


def test_rsa_multiplicative_property_full_size(engine: CryptoEngine, full_keypair: RsaKeyPair) -> None:
    """Test the identity on 10 pairs at 3072 bits"""
    rng = DeterministicRandom("pairs-3072")
    pub = full_keypair.public
    assert pub.n.bit_length() == 3072
    for _ in range(10):
        a, b = rng.randbelow(pub.n), rng.randbelow(pub.n)
        product = engine.rsa_raw_encrypt(pub, a) * engine.rsa_raw_encrypt(pub, b) % pub.n
        assert product == engine.rsa_raw_encrypt(pub, a * b % pub.n)


def test_rsa_round_trip_sweep(engine: CryptoEngine, keypair: RsaKeyPair) -> None:
    """Test decrypt(encrypt(m)) = m for 500 values in [0, n), edges included"""
    rng = DeterministicRandom("sweep")
    values = [0, 1, keypair.n - 1] + [rng.randbelow(keypair.n) for _ in range(497)]
    for m in values:
        c = engine.rsa_raw_encrypt(keypair.public, m)
        assert engine.rsa_raw_decrypt(keypair.private, c) == m
    assert (engine.counter.ae, engine.counter.ad) == (500, 500)


def test_rsa_operand_out_of_range(engine: CryptoEngine, textbook: RsaKeyPair) -> None:
    """Test operands outside [0, n) are refused without booking an operation"""
    with pytest.raises(RangeError):
        engine.rsa_raw_encrypt(textbook.public, 3233)
    with pytest.raises(RangeError):
        engine.rsa_raw_decrypt(textbook.private, -1)
    assert engine.counter.ae == 0


def test_rsa_blocks_round_trip(engine: CryptoEngine, keypair: RsaKeyPair) -> None:
    """Test chunked raw RSA books one operation each way"""
    data = bytes(range(160))
    blocks = engine.rsa_encrypt_blocks(keypair.public, data)
    assert len(blocks) == 3  # 63-byte input blocks under a 512-bit modulus
    assert engine.rsa_decrypt_blocks(keypair.private, blocks, len(data)) == data
    assert engine.counter.ae == 1
    assert engine.counter.ad == 1


def test_rsa_blocks_wrong_count(engine: CryptoEngine, keypair: RsaKeyPair) -> None:
    """Test decrypting with a mismatched block count"""
    blocks = engine.rsa_encrypt_blocks(keypair.public, bytes(16))
    with pytest.raises(DecryptFailure):
        engine.rsa_decrypt_blocks(keypair.private, blocks * 2, 16)


def test_sha256_empty_vector(engine: CryptoEngine) -> None:
    """Test SHA-256 of the empty string"""
    assert engine.hash(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert engine.counter.h == 1


def test_hmac_matches_reference(engine: CryptoEngine) -> None:
    """Test HMAC-SHA256 against the standard library"""
    key = SymKey(material=bytes(range(16)))
    data = b"what do ya want for nothing?"
    assert engine.hmac(key, data) == hmac.new(key.material, data, hashlib.sha256).digest()
    assert engine.counter.hmac == 1


def test_symmetric_lengths(engine: CryptoEngine) -> None:
    """Test always-add padding: 288 bits -> 384, 128 bits -> 256"""
    key = SymKey.generate(engine.rng)
    assert len(engine.sym_encrypt(key, bytes(36))) * 8 == 384
    assert len(engine.sym_encrypt(key, bytes(16))) * 8 == 256


def test_symmetric_round_trip(engine: CryptoEngine) -> None:
    """Test decrypt inverts encrypt and both count as SE"""
    key = SymKey.generate(engine.rng)
    ct = engine.sym_encrypt(key, b"group session key")
    assert engine.sym_decrypt(key, ct) == b"group session key"
    assert engine.counter.se == 2


def test_symmetric_errors(engine: CryptoEngine) -> None:
    """Test empty plaintext and partial blocks"""
    key = SymKey.generate(engine.rng)
    with pytest.raises(ValueError):
        engine.sym_encrypt(key, b"")
    with pytest.raises(PaddingError):
        engine.sym_decrypt(key, bytes(15))


def test_wrong_key_never_decrypts_fixed_size_body(engine: CryptoEngine) -> None:
    """Test 1000 wrong keys on a 256-bit body all raise PaddingError"""
    rng = DeterministicRandom("wrong-keys")
    key = SymKey.generate(rng)
    plaintext = rng.random_bytes(32)
    ct = engine.sym_encrypt(key, plaintext)
    accepted = 0
    for _ in range(1000):
        try:
            engine.sym_decrypt(SymKey.generate(rng), ct, len(plaintext))
        except PaddingError:
            continue
        accepted += 1
    assert accepted == 0
    assert engine.sym_decrypt(key, ct, len(plaintext)) == plaintext


def test_expected_length_is_enforced(engine: CryptoEngine) -> None:
    """Test a correct key with the wrong expected length is refused"""
    key = SymKey.generate(engine.rng)
    ct = engine.sym_encrypt(key, bytes(20))
    assert engine.sym_decrypt(key, ct) == bytes(20)
    with pytest.raises(PaddingError):
        engine.sym_decrypt(key, ct, 21)


def test_symmetric_encryption_is_deterministic_per_key(engine: CryptoEngine) -> None:
    """Test the fixed IV: equal leading blocks give equal leading ciphertext blocks"""
    key = SymKey.generate(engine.rng)
    first = engine.sym_encrypt(key, bytes(16) + b"A" * 16)
    second = engine.sym_encrypt(key, bytes(16) + b"B" * 16)
    assert first[:16] == second[:16]
    assert first[16:32] != second[16:32]
    assert engine.sym_encrypt(SymKey.generate(engine.rng), bytes(32))[:16] != first[:16]


def test_metering_books_to_protocol(engine: CryptoEngine) -> None:
    """Test operations inside metering() go to that protocol only"""
    with engine.metering(Protocol.HGA):
        engine.hash(b"x")
    engine.hash(b"y")
    assert engine.counters[Protocol.HGA].h == 1
    assert engine.counters[Protocol.HGAKA].h == 1
    assert engine.totals().h == 2


def test_counters_partition_every_call(engine: CryptoEngine, keypair: RsaKeyPair) -> None:
    """Test k random primitive calls book exactly k operations, split by kind and protocol"""
    rng = DeterministicRandom("partition")
    key = SymKey.generate(rng)
    ct = engine.sym_encrypt(key, bytes(16))
    calls = {
        "se": lambda: engine.sym_decrypt(key, ct),
        "ae": lambda: engine.rsa_raw_encrypt(keypair.public, 7),
        "ad": lambda: engine.rsa_raw_decrypt(keypair.private, 7),
        "h": lambda: engine.hash(b"x"),
        "hmac": lambda: engine.hmac(key, b"x"),
    }
    engine.reset()
    expected = {p: dict.fromkeys(calls, 0) for p in Protocol}
    kinds = sorted(calls)
    protocols = list(Protocol)
    for _ in range(300):
        kind = kinds[rng.randbelow(len(kinds))]
        protocol = protocols[rng.randbelow(len(protocols))]
        with engine.metering(protocol):
            calls[kind]()
        expected[protocol][kind] += 1

    for protocol in Protocol:
        assert engine.counters[protocol] == OpCounter(**expected[protocol])
    totals = engine.totals()
    assert totals.total == 300
    assert totals == engine.counters[Protocol.HGAKA] + engine.counters[Protocol.HGA]


def test_or_nonce_below_modulus(engine: CryptoEngine) -> None:
    """Test OrNonces fit the RSA plaintext space and skip 0 and 1"""
    for _ in range(200):
        value = engine.new_or_nonce(3233).as_int()
        assert 1 < value < 3233
    assert len(engine.issued) == 200


def test_nonce_and_key_sizes() -> None:
    """Test 128-bit size checks"""
    with pytest.raises(ValidationError):
        SymKey(material=bytes(15))
    with pytest.raises(ValidationError):
        Nonce(value=bytes(17), kind=NonceKind.EN)
    nonce = Nonce.from_int(5, NonceKind.OR)
    assert nonce.as_int() == 5
    assert nonce.as_key().material == nonce.value


def test_sym_key_repr_redacted() -> None:
    """Test key material is not printed"""
    key = SymKey(material=b"A" * 16)
    assert "AAAA" not in repr(key)


def test_deterministic_random() -> None:
    """Test seeding and forking"""
    assert DeterministicRandom(3).random_bytes(16) == DeterministicRandom(3).random_bytes(16)
    root = DeterministicRandom(3)
    assert root.fork("a").random_bytes(16) != root.fork("b").random_bytes(16)


def test_generate_test_keypair_is_seeded() -> None:
    """Test seeded generation fixes the key"""
    first = generate_rsa_keypair(KeySize.TEST_512.bits, DeterministicRandom(1), insecure_test_keys=True)
    second = generate_rsa_keypair(KeySize.TEST_512.bits, DeterministicRandom(1), insecure_test_keys=True)
    assert first.n == second.n
    assert first.n.bit_length() == 512


def test_small_keys_need_opt_in() -> None:
    """Test sub-3072 keys are refused without insecure_test_keys"""
    with pytest.raises(ValueError):
        generate_rsa_keypair(512, DeterministicRandom(1))
    with pytest.raises(ValidationError):
        RsaKeyPair(n=3233, e=17, d=413, p=61, q=53)


def test_key_size_presets() -> None:
    """Test key-size enum"""
    assert KeySize.FULL_3072.bits == 3072
    assert not KeySize.FULL_3072.insecure
    assert KeySize.TEST_64.insecure
