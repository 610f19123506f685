"""
Group Client - a non-leader member

HGAKA S4/S5: extend the HM chain. S8: store the OrNonce share.
HGA S1: send the RSA token to the leader. S4: take SK under the OrNonce key.
"""

from typing import List, Optional

import structlog

from src.config import settings
from src.crypto import CryptoEngine, Protocol, SymKey
from src.errors import Rejected, Terminated, TerminationReason
from src.actors.base_actor import BaseActor
from src.actors.registry import GroupConfig, KeyRegistry
from src.actors.session import Role, Step
from src.tokens import hm_gen
from src.wire import Direction, MessageTag, PayloadItem, ProtocolMessage
from src.wire.payloads import ClientShareBody, KeyDeliveryBody

logger = structlog.get_logger()


class GroupClient(BaseActor):
    """Non-leader client device"""

    role = Role.CLIENT

    def __init__(
        self,
        entity_id: int,
        config: GroupConfig,
        engine: CryptoEngine,
        registry: KeyRegistry,
        delta_t_ms: Optional[int] = None,
        timeout_ms: Optional[int] = None,
        continue_to_hga: bool = True
    ) -> None:
        super().__init__(entity_id, engine, registry, delta_t_ms)
        if entity_id not in config.clients[:-1]:
            raise ValueError(f"{entity_id} is not a non-leader member of the group")
        self.config = config
        self.timeout = timeout_ms or settings.PARTICIPANT_TIMEOUT_FACTOR * self.delta_t
        self.continue_to_hga = continue_to_hga
        self.key: SymKey = registry.sym_key(entity_id)
        self.index = config.clients.index(entity_id)

    async def handle_message(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        if msg.sender != self.config.leader and msg.tag is not MessageTag.HGAKA_CHAIN:
            raise Rejected(TerminationReason.UNEXPECTED, f"{msg.describe()} not from the leader")
        with self.engine.metering(msg.protocol):
            if msg.tag is MessageTag.HGAKA_CHAIN:
                return self._on_chain(msg, now)
            if msg.tag is MessageTag.HGAKA_SHARE:
                return self._on_share(msg, now)
            if msg.tag is MessageTag.HGA_SHARE:
                return self._on_key_delivery(msg, now)
        raise Rejected(TerminationReason.UNEXPECTED, f"{msg.tag.label} is not for a client")

    def _on_chain(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """HM_i = HMAC(K_i, HM_(i+1)), forwarded one step down the chain"""
        path = self.config.client_list.chain_path()
        hop = msg.hop
        if self.state.step is not None or hop + 2 >= len(path) or path[hop + 1] != self.entity_id:
            raise Rejected(TerminationReason.UNEXPECTED, f"chain hop {hop} at {self.state.step}")
        if msg.sender != path[hop]:
            raise Rejected(TerminationReason.UNEXPECTED, f"chain hop {hop} from {msg.sender}")

        hm = hm_gen(self.engine, self.key, msg.items[0].data)
        receiver = path[hop + 2]
        last = receiver == self.config.leader
        self.state.advance(Step.HGAKA_S5 if last else Step.HGAKA_S4)
        self.arm_timer(now, self.timeout)
        return [ProtocolMessage(
            tag=MessageTag.HGAKA_CHAIN,
            direction=Direction.RES if last else Direction.REQ,
            hop=hop + 1,
            sender=self.entity_id,
            receiver=receiver,
            items=(PayloadItem.mac(hm),)
        )]

    def _on_share(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """Store OrNonce; then emit the PreHGA token"""
        if self.state.step not in (Step.HGAKA_S4, Step.HGAKA_S5) or msg.hop != self.index:
            raise Rejected(TerminationReason.UNEXPECTED, f"share at {self.state.step}")
        share = self.open_item(
            self.key, msg.items[0], ClientShareBody.from_bytes, ClientShareBody.plain_bits // 8
        )
        self.state.or_nonce = share.or_nonce
        self.state.outstanding_challenges["as"] = share.en_nonce
        self.state.advance(Step.HGAKA_S8)

        if not self.continue_to_hga:
            self.complete()
            return []

        pub = self.registry.public_key(self.config.target)
        with self.engine.metering(Protocol.HGA):
            token = self.engine.rsa_raw_encrypt(pub, share.or_nonce.as_int())
        self.state.advance(Step.HGA_S1)
        self.arm_timer(now, self.timeout)
        return [ProtocolMessage(
            tag=MessageTag.PRE_HGA,
            direction=Direction.REQ,
            hop=self.index,
            sender=self.entity_id,
            receiver=self.config.leader,
            items=(PayloadItem.rsa([token], pub.byte_length),)
        )]

    def _on_key_delivery(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """EOrNonce_i[SK || EnNonce_i]"""
        if self.state.step is not Step.HGA_S1 or msg.hop != self.index:
            raise Rejected(TerminationReason.UNEXPECTED, f"key delivery at {self.state.step}")
        delivery = self.open_item(
            self.state.or_nonce.as_key(),
            msg.items[0],
            KeyDeliveryBody.from_bytes,
            KeyDeliveryBody.plain_bits // 8
        )
        self.state.session_key = delivery.session_key
        self.state.outstanding_challenges["target"] = delivery.en_nonce
        self.state.advance(Step.HGA_S4)
        self.complete()
        return []

    async def on_timeout(self, now: int) -> List[ProtocolMessage]:
        raise Terminated(TerminationReason.TIMEOUT, f"no message at {self.state.step}")
