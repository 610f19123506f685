"""
Cryptographic primitives, key material and operation counters
"""

from src.crypto.keys import (
    KeySize,
    Nonce,
    NonceKind,
    RsaKeyPair,
    RsaPrivateKey,
    RsaPublicKey,
    SymKey,
    constant_time_equal,
    generate_rsa_keypair,
)
from src.crypto.primitives import DIGEST_BITS, CryptoEngine, OpCounter, Protocol
from src.crypto.rng import DeterministicRandom, RandomSource, SystemRandomSource

__all__ = [
    "CryptoEngine",
    "DIGEST_BITS",
    "DeterministicRandom",
    "KeySize",
    "Nonce",
    "NonceKind",
    "OpCounter",
    "Protocol",
    "RandomSource",
    "RsaKeyPair",
    "RsaPrivateKey",
    "RsaPublicKey",
    "SymKey",
    "SystemRandomSource",
    "constant_time_equal",
    "generate_rsa_keypair",
]
