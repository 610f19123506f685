"""
Verification algorithms: timestamp freshness, identity, nonce echo and the
nested-HMAC group token
"""

from typing import Callable, Mapping, Sequence, Union

import structlog

from src.crypto import CryptoEngine, Nonce, SymKey, constant_time_equal
from src.errors import UnknownClient

logger = structlog.get_logger()

KeyLookup = Union[Mapping[int, SymKey], Callable[[int], SymKey]]


def ts_veri(ts: int, now: int, delta: int) -> bool:
    """|ts - now| <= delta on the non-wrapping logical clock"""
    return abs(ts - now) <= delta


def id_veri(sender: int, registered: int) -> bool:
    return sender == registered


def en_veri(challenge: Nonce, response: Nonce) -> bool:
    """Constant-time comparison of an issued EnNonce with its echo"""
    return constant_time_equal(challenge.value, response.value)


def hm_gen(engine: CryptoEngine, key: SymKey, seed: bytes) -> bytes:
    """One link of the HM chain: HMAC(key, seed)"""
    return engine.hmac(key, seed)


def _resolve(keys: KeyLookup, entity_id: int) -> SymKey:
    if callable(keys):
        return keys(entity_id)
    try:
        return keys[entity_id]
    except KeyError as e:
        raise UnknownClient(f"no long-term key for {entity_id}") from e


def hm_fold(engine: CryptoEngine, chain: Sequence[int], keys: KeyLookup, seed: Nonce) -> bytes:
    """
    Recompute the group token in one pass

    Key[0] is the leader (last list element), Key[n-1] the deepest client.
    """
    key_order = list(reversed(chain))
    hm = hm_gen(engine, _resolve(keys, key_order[0]), seed.value)
    for entity_id in key_order[1:]:
        hm = hm_gen(engine, _resolve(keys, entity_id), hm)
    return hm


def hm_veri(
    engine: CryptoEngine,
    hm1: bytes,
    chain: Sequence[int],
    keys: KeyLookup,
    seed: Nonce
) -> bool:
    """
    Verify the aggregated chain token against every client's long-term key

    Args:
        engine: Engine the HMACs are booked to
        hm1: Token received from the leader
        chain: ClientList order (index 0 deepest, last is the leader)
        keys: Mapping or lookup callable from entity id to key
        seed: EnNonce2 the chain was seeded with

    Returns:
        True iff the recomputed token equals hm1

    Raises:
        UnknownClient: A chain id has no key
    """
    expected = hm_fold(engine, chain, keys, seed)
    ok = constant_time_equal(expected, hm1)
    if not ok:
        logger.debug("HM chain mismatch", nc=len(chain))
    return ok
