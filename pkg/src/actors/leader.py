"""
Group Leader - fronts all external communication for the group

HGAKA: S1 (Msg1), S3 (start the HM chain), S6 (Msg6), S8 (fan out shares).
HGA: S1 (collect PreHGA tokens), S2 (Msg1 to the target), S4 (fan out SK).
The two external requests are resent once with fresh EnNonce and Ts when
the reply does not arrive in time.
"""

from typing import Dict, List, Optional

import structlog

from src.config import settings
from src.crypto import CryptoEngine, NonceKind, Protocol, SymKey
from src.crypto.keys import NONCE_BYTES
from src.errors import RangeError, Rejected, Terminated, TerminationReason
from src.actors.base_actor import BaseActor
from src.actors.registry import GroupConfig, KeyRegistry
from src.actors.session import Role, Step
from src.tokens import build_group_authenticator, en_veri, hm_gen
from src.wire import Direction, MessageTag, PayloadItem, ProtocolMessage
from src.wire.payloads import LeaderShareBody, RequestBody, pack_nonces, unpack_nonces

logger = structlog.get_logger()


class GroupLeader(BaseActor):
    """Last element of the ClientList"""

    role = Role.LEADER

    def __init__(
        self,
        config: GroupConfig,
        engine: CryptoEngine,
        registry: KeyRegistry,
        delta_t_ms: Optional[int] = None,
        timeout_ms: Optional[int] = None,
        continue_to_hga: bool = True
    ) -> None:
        """
        Initialize leader

        Args:
            config: Group membership
            engine: Crypto engine owned by the leader
            registry: Client view (own key and the target public key)
            delta_t_ms: Freshness window
            timeout_ms: Wait before resend/terminate, defaults to 2 * delta
            continue_to_hga: Run HGA right after HGAKA completes
        """
        super().__init__(config.leader, engine, registry, delta_t_ms)
        self.config = config
        self.timeout = timeout_ms or settings.LEADER_TIMEOUT_FACTOR * self.delta_t
        self.continue_to_hga = continue_to_hga
        self.key: SymKey = registry.sym_key(config.leader)
        self.target_pub = registry.public_key(config.target)
        self.resend_available = False
        self.tokens: Dict[int, int] = {}

    # ------------------------------------------------------------------
    # HGAKA
    # ------------------------------------------------------------------

    async def start(self, now: int) -> List[ProtocolMessage]:
        """S1: request credentials from the AS"""
        with self.engine.metering(Protocol.HGAKA):
            self.state.advance(Step.HGAKA_S1)
            self.resend_available = True
            self.arm_timer(now, self.timeout)
            logger.info("HGAKA started", leader=self.entity_id, nc=self.config.nc)
            return [self._build_request(now)]

    def _build_request(self, now: int) -> ProtocolMessage:
        en1 = self.engine.new_en_nonce()
        self.state.outstanding_challenges["en1"] = en1
        body = RequestBody(clients=self.config.clients, target=self.config.target, en_nonce=en1, ts=now)
        ct = self.engine.sym_encrypt(self.key, body.to_bytes())
        return ProtocolMessage(
            tag=MessageTag.HGAKA_MSG1,
            direction=Direction.REQ,
            sender=self.entity_id,
            receiver=self.config.as_id,
            items=(PayloadItem.sym(ct, body.plain_bits),)
        )

    async def handle_message(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        handlers = {
            MessageTag.HGAKA_MSG2: (Step.HGAKA_S1, self.config.as_id, self._on_challenge),
            MessageTag.HGAKA_CHAIN: (Step.HGAKA_S3, self.config.clients[0], self._on_chain_return),
            MessageTag.HGAKA_MSG7: (Step.HGAKA_S6, self.config.as_id, self._on_credentials),
            MessageTag.PRE_HGA: (Step.HGA_S1, None, self._on_pre_token),
            MessageTag.HGA_MSG2: (Step.HGA_S2, self.config.target, self._on_target_reply),
        }
        if msg.tag not in handlers:
            raise Rejected(TerminationReason.UNEXPECTED, f"{msg.tag.label} is not for the leader")
        step, sender, handler = handlers[msg.tag]
        if self.state.step is not step or (sender is not None and msg.sender != sender):
            raise Rejected(TerminationReason.UNEXPECTED, f"{msg.describe()} at {self.state.step}")
        with self.engine.metering(msg.protocol):
            return handler(msg, now)

    def _on_challenge(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S3: check the EnNonce1 echo and seed the HM chain with EnNonce2"""
        echo, en2 = self.open_item(
            self.key,
            msg.items[0],
            lambda data: unpack_nonces(data, NonceKind.EN, NonceKind.EN),
            2 * NONCE_BYTES
        )
        if not en_veri(self.state.outstanding_challenges["en1"], echo):
            raise Terminated(TerminationReason.EN_MISMATCH, "EnNonce1 echo")
        self.state.outstanding_challenges["en2"] = en2
        self.resend_available = False

        hm = hm_gen(self.engine, self.key, en2.value)
        path = self.config.client_list.chain_path()
        self.state.advance(Step.HGAKA_S3)
        self.arm_timer(now, self.timeout)
        return [ProtocolMessage(
            tag=MessageTag.HGAKA_CHAIN,
            direction=Direction.REQ if len(path) > 2 else Direction.RES,
            hop=0,
            sender=self.entity_id,
            receiver=path[1],
            items=(PayloadItem.mac(hm),)
        )]

    def _on_chain_return(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S6: forward HM1 with a fresh EnNonce3"""
        if msg.hop != self.config.nc - 1:
            raise Rejected(TerminationReason.UNEXPECTED, f"chain hop {msg.hop}")
        en3 = self.engine.new_en_nonce()
        self.state.outstanding_challenges["en3"] = en3
        ct = self.engine.sym_encrypt(self.key, pack_nonces(self.state.outstanding_challenges["en2"], en3))
        self.state.advance(Step.HGAKA_S6)
        self.arm_timer(now, self.timeout)
        return [ProtocolMessage(
            tag=MessageTag.HGAKA_MSG6,
            direction=Direction.REQ,
            sender=self.entity_id,
            receiver=self.config.as_id,
            items=(PayloadItem.mac(msg.items[0].data), PayloadItem.sym(ct, 256))
        )]

    def _on_credentials(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S8: take SK and own OrNonce, distribute the other shares"""
        nc = self.config.nc
        if len(msg.items) != nc + 2:
            raise Terminated(TerminationReason.MALFORMED, f"Msg7 with {len(msg.items)} items for nc={nc}")
        share = self.open_item(
            self.key, msg.items[nc - 1], LeaderShareBody.from_bytes, LeaderShareBody.plain_bits // 8
        )
        if not en_veri(self.state.outstanding_challenges["en3"], share.en_nonce):
            raise Terminated(TerminationReason.EN_MISMATCH, "EnNonce3 echo")

        self.state.session_key = share.session_key
        self.state.or_nonce = share.or_nonce
        self.state.target_package = msg.items[nc]
        self.state.package_digest = msg.items[nc + 1]
        self.state.advance(Step.HGAKA_S8)

        out = [
            ProtocolMessage(
                tag=MessageTag.HGAKA_SHARE,
                direction=Direction.RES,
                hop=index,
                sender=self.entity_id,
                receiver=client,
                items=(msg.items[index],)
            )
            for index, client in enumerate(self.config.clients[:-1])
        ]
        logger.info("HGAKA credentials received", leader=self.entity_id)
        if not self.continue_to_hga:
            self.complete()
            return out

        with self.engine.metering(Protocol.HGA):
            own = self.engine.rsa_raw_encrypt(self.target_pub, share.or_nonce.as_int())
        self.tokens = {self.entity_id: own}
        self.state.advance(Step.HGA_S1)
        self.arm_timer(now, self.timeout)
        return out

    # ------------------------------------------------------------------
    # HGA
    # ------------------------------------------------------------------

    def _on_pre_token(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S1: collect one token per non-leader client"""
        if msg.sender not in self.config.clients[:-1]:
            raise Rejected(TerminationReason.UNKNOWN_ID, f"{msg.sender} is not in the group")
        if msg.sender in self.tokens:
            raise Rejected(TerminationReason.DUPLICATE, f"second token from {msg.sender}")
        try:
            blocks = msg.items[0].rsa_blocks(self.target_pub.byte_length)
        except ValueError as e:
            raise Rejected(TerminationReason.MALFORMED, str(e)) from e
        if len(blocks) != 1 or not 0 <= blocks[0] < self.target_pub.n:
            raise Rejected(TerminationReason.MALFORMED, "token is not one block below n")
        self.tokens[msg.sender] = blocks[0]
        if len(self.tokens) < self.config.nc:
            return []
        return [self._build_access_request(now)]

    def _build_access_request(self, now: int) -> ProtocolMessage:
        """S2: ESK request, the group authenticator, the stored package and its hash"""
        try:
            authenticator = build_group_authenticator(
                [self.tokens[c] for c in self.config.clients],
                self.target_pub
            )
        except RangeError as e:
            raise Terminated(TerminationReason.GROUP_VERIFY_FAILED, str(e)) from e

        if self.state.step is not Step.HGA_S2:
            self.state.advance(Step.HGA_S2)
            self.resend_available = True
        en1 = self.engine.new_en_nonce()
        self.state.outstanding_challenges["hga-en1"] = en1
        body = RequestBody(clients=self.config.clients, target=self.config.target, en_nonce=en1, ts=now)
        ct = self.engine.sym_encrypt(self.state.session_key, body.to_bytes())
        width = self.target_pub.byte_length
        self.arm_timer(now, self.timeout)
        return ProtocolMessage(
            tag=MessageTag.HGA_MSG1,
            direction=Direction.REQ,
            sender=self.entity_id,
            receiver=self.config.target,
            items=(
                PayloadItem.sym(ct, body.plain_bits),
                *(PayloadItem.rsa([t], width) for t in authenticator.tokens),
                self.state.target_package,
                self.state.package_digest,
            )
        )

    def _on_target_reply(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S4: check the EnNonce1 echo and forward each client's key delivery"""
        nc = self.config.nc
        if len(msg.items) != nc:
            raise Terminated(TerminationReason.MALFORMED, f"HGA Msg2 with {len(msg.items)} items for nc={nc}")
        (echo,) = self.open_item(
            self.state.session_key,
            msg.items[0],
            lambda data: unpack_nonces(data, NonceKind.EN),
            NONCE_BYTES
        )
        if not en_veri(self.state.outstanding_challenges["hga-en1"], echo):
            raise Terminated(TerminationReason.EN_MISMATCH, "HGA EnNonce1 echo")

        self.state.advance(Step.HGA_S4)
        self.complete()
        return [
            ProtocolMessage(
                tag=MessageTag.HGA_SHARE,
                direction=Direction.RES,
                hop=index,
                sender=self.entity_id,
                receiver=client,
                items=(msg.items[index + 1],)
            )
            for index, client in enumerate(self.config.clients[:-1])
        ]

    async def on_timeout(self, now: int) -> List[ProtocolMessage]:
        step = self.state.step
        if step is Step.HGAKA_S1 and self.resend_available:
            self.resend_available = False
            self.arm_timer(now, self.timeout)
            logger.info("Resending HGAKA Msg1", leader=self.entity_id)
            with self.engine.metering(Protocol.HGAKA):
                return [self._build_request(now)]
        if step is Step.HGA_S2 and self.resend_available:
            self.resend_available = False
            logger.info("Resending HGA Msg1", leader=self.entity_id)
            with self.engine.metering(Protocol.HGA):
                return [self._build_access_request(now)]
        if step is Step.HGA_S1:
            missing = [c for c in self.config.clients if c not in self.tokens]
            raise Terminated(TerminationReason.INCOMPLETE_GROUP, f"no token from {missing}")
        raise Terminated(TerminationReason.TIMEOUT, f"no reply at {step.value if step else 'start'}")
