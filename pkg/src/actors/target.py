"""
Target Device - HGA step S3

Check order on HGA Msg1: open the package (K_D1, then K_GD1), open the ESK
request, freshness/identity/replay checks, then the package hash. RSA work
only starts once the hash matches.
"""

from typing import List, Optional

import structlog

from src.config import settings
from src.crypto import CryptoEngine, Protocol, SymKey, constant_time_equal
from src.crypto.keys import SYM_KEY_BYTES
from src.errors import (
    DecryptFailure,
    RangeError,
    Rejected,
    Terminated,
    TerminationReason,
)
from src.actors.base_actor import BaseActor
from src.actors.registry import KeyRegistry
from src.actors.replay_cache import ReplayCache
from src.actors.session import Phase, Role, Step
from src.tokens import (
    EncAuthVeriToken,
    build_group_authenticator,
    homomorphic_group_verify,
    id_veri,
    ts_veri,
)
from src.wire import Direction, MessageTag, PayloadItem, ProtocolMessage
from src.wire.payloads import KeyDeliveryBody, RequestBody, TargetPackageBody, pack_nonces

logger = structlog.get_logger()


class TargetDevice(BaseActor):
    """Verifies the group in one homomorphic comparison and hands out SK"""

    role = Role.TARGET

    def __init__(
        self,
        entity_id: int,
        engine: CryptoEngine,
        registry: KeyRegistry,
        delta_t_ms: Optional[int] = None,
        replay_cache: Optional[ReplayCache] = None
    ) -> None:
        super().__init__(entity_id, engine, registry, delta_t_ms)
        self.replay_cache = replay_cache or ReplayCache(settings.REPLAY_WINDOW_FACTOR * self.delta_t)
        self.keypair = registry.keypair(entity_id)
        self.width = self.keypair.public.byte_length

    @property
    def serves_after_termination(self) -> bool:
        return True

    async def handle_message(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        if msg.tag is not MessageTag.HGA_MSG1:
            raise Rejected(TerminationReason.UNEXPECTED, f"{msg.tag.label} is not for the target")
        with self.engine.metering(Protocol.HGA):
            return self._handle_access_request(msg, now)

    def _handle_access_request(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        request_item, *token_items, package_item, digest_item = msg.items

        package = self.open_item(
            self.registry.sym_key(self.entity_id),
            package_item,
            lambda data: TargetPackageBody.from_bytes(data, self.width)
        )
        session_key = self.open_item(
            self.registry.group_key(self.entity_id),
            PayloadItem.sym(package.sealed_key, 128),
            lambda data: SymKey(material=data),
            SYM_KEY_BYTES
        )
        body = self.open_item(session_key, request_item, RequestBody.from_bytes)

        if not ts_veri(body.ts, now, self.delta_t):
            raise Terminated(TerminationReason.STALE, f"ts={body.ts} now={now}")
        if not id_veri(msg.sender, body.clients[-1]) or body.target != self.entity_id:
            raise Terminated(TerminationReason.ID_MISMATCH, "request identities")
        if len(body.clients) < 2 or len(token_items) != len(body.clients):
            raise Terminated(TerminationReason.GROUP_VERIFY_FAILED, "token count does not match the group")
        if self.replay_cache.seen(msg.sender, body.ts, body.en_nonce.value, now):
            raise Terminated(TerminationReason.DUPLICATE, "HGA Msg1 replay")

        # Integrity hash before any RSA operation
        digest = self.engine.hash(package.digest_input())
        if not constant_time_equal(digest, digest_item.data):
            raise Terminated(TerminationReason.HASH_MISMATCH, "package hash")

        try:
            tokens = [item.rsa_blocks(self.width) for item in token_items]
            if any(len(blocks) != 1 for blocks in tokens):
                raise ValueError("token is not a single block")
            authenticator = build_group_authenticator([b[0] for b in tokens], self.keypair.public)
        except (ValueError, RangeError) as e:
            raise Terminated(TerminationReason.GROUP_VERIFY_FAILED, str(e)) from e

        nc = len(body.clients)
        try:
            veri_token = EncAuthVeriToken.from_bytes(package.veri_token, self.width, nc)
            verdict = homomorphic_group_verify(self.engine, authenticator, veri_token, self.keypair)
        except DecryptFailure as e:
            raise Terminated(TerminationReason.DECRYPT_FAILURE, str(e)) from e
        except RangeError as e:
            raise Terminated(TerminationReason.GROUP_VERIFY_FAILED, str(e)) from e
        if not verdict:
            raise Terminated(TerminationReason.GROUP_VERIFY_FAILED, "E(prod OrNonce) != prod tokens")
        self.replay_cache.remember(msg.sender, body.ts, body.en_nonce.value, now)

        items = [PayloadItem.sym(self.engine.sym_encrypt(session_key, pack_nonces(body.en_nonce)), 128)]
        for client, or_nonce in zip(body.clients[:-1], verdict.or_nonces):
            en_i = self.engine.new_en_nonce()
            self.state.outstanding_challenges[f"client:{client}"] = en_i
            delivery = KeyDeliveryBody(session_key=session_key, en_nonce=en_i)
            ct = self.engine.sym_encrypt(or_nonce.as_key(), delivery.to_bytes())
            items.append(PayloadItem.sym(ct, delivery.plain_bits))

        self.state.session_key = session_key
        if self.state.step is not Step.HGA_S3:
            self.state.advance(Step.HGA_S3)
        self.complete()
        logger.info("Group access granted", target=self.entity_id, leader=msg.sender, nc=nc)
        return [ProtocolMessage(
            tag=MessageTag.HGA_MSG2,
            direction=Direction.RES,
            sender=self.entity_id,
            receiver=msg.sender,
            items=tuple(items)
        )]

    async def on_timeout(self, now: int) -> List[ProtocolMessage]:
        return []

    def terminate(self, reason: TerminationReason, msg: Optional[ProtocolMessage]) -> None:
        # Each Msg1 is its own attempt; the device stays available
        if self.state.phase is not Phase.COMPLETED:
            self.state.reason = reason
        logger.warning("Access request refused", target=self.entity_id, reason=reason.value)
