"""
Authentication Server - HGAKA steps S2 and S7

Sessions are keyed by group leader. Failures on an incoming Msg1 end that
attempt only; failures on Msg6 terminate the leader's session.
"""

from typing import Dict, List, Optional

from pydantic import Field
import structlog

from src.config import settings
from src.crypto import CryptoEngine, Nonce, NonceKind, Protocol
from src.crypto.keys import NONCE_BYTES
from src.errors import Rejected, Terminated, TerminationReason, UnknownClient
from src.actors.base_actor import BaseActor
from src.actors.registry import KeyRegistry
from src.actors.replay_cache import ReplayCache
from src.actors.session import ActorSummary, Phase, Role, SessionState, Step
from src.tokens import EncAuthVeriToken, en_veri, hm_veri, id_veri, ts_veri
from src.wire import (
    Direction,
    ItemKind,
    MessageTag,
    PayloadItem,
    ProtocolMessage,
    package_booked_bits,
)
from src.wire.payloads import (
    ClientShareBody,
    LeaderShareBody,
    RequestBody,
    TargetPackageBody,
    pack_nonces,
    unpack_nonces,
)

logger = structlog.get_logger()


class ServerSession(SessionState):
    """One leader's HGAKA session at the AS"""

    leader: int
    clients: List[int] = Field(default_factory=list)
    target: int = 0
    closed_at: Optional[int] = Field(None, description="Logical time the session completed or ended")


class AuthenticationServer(BaseActor):
    """Issues OrNonces, the session key and the target package"""

    role = Role.SERVER

    def __init__(
        self,
        entity_id: int,
        engine: CryptoEngine,
        registry: KeyRegistry,
        delta_t_ms: Optional[int] = None,
        replay_cache: Optional[ReplayCache] = None,
        session_timeout_ms: Optional[int] = None
    ) -> None:
        super().__init__(entity_id, engine, registry, delta_t_ms)
        self.replay_cache = replay_cache or ReplayCache(settings.REPLAY_WINDOW_FACTOR * self.delta_t)
        self.session_timeout = session_timeout_ms or settings.PARTICIPANT_TIMEOUT_FACTOR * self.delta_t
        self.sessions: Dict[int, ServerSession] = {}
        self.retention = settings.REPLAY_WINDOW_FACTOR * self.delta_t
        self.retired: Dict[Phase, int] = {Phase.COMPLETED: 0, Phase.TERMINATED: 0}
        self.retired_reason: Optional[TerminationReason] = None

    @property
    def deadline(self) -> Optional[int]:
        timers = [s.timer for s in self.sessions.values() if s.timer is not None]
        return min(timers) if timers else None

    @property
    def serves_after_termination(self) -> bool:
        return True

    async def handle_message(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        self.evict_closed(now)
        with self.engine.metering(Protocol.HGAKA):
            if msg.tag is MessageTag.HGAKA_MSG1:
                return self._handle_request(msg, now)
            if msg.tag is MessageTag.HGAKA_MSG6:
                return self._handle_group_token(msg, now)
        raise Rejected(TerminationReason.UNEXPECTED, f"{msg.tag.label} is not for the AS")

    def _handle_request(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S2: verify Msg1 and challenge the leader with EnNonce2"""
        try:
            leader_key = self.registry.sym_key(msg.sender)
        except UnknownClient as e:
            raise Terminated(TerminationReason.UNKNOWN_ID, str(e)) from e

        body = self.open_item(leader_key, msg.items[0], RequestBody.from_bytes)

        if not ts_veri(body.ts, now, self.delta_t):
            raise Terminated(TerminationReason.STALE, f"ts={body.ts} now={now}")
        if not id_veri(msg.sender, body.clients[-1]) or len(body.clients) < 2:
            raise Terminated(TerminationReason.ID_MISMATCH, "leader does not match the client list")
        if len(set(body.clients)) != len(body.clients):
            raise Terminated(TerminationReason.ID_MISMATCH, "duplicate client ids")
        unknown = [c for c in [*body.clients, body.target] if c not in self.registry.sym_keys]
        if unknown or body.target not in self.registry.target_pubkeys:
            raise Terminated(TerminationReason.UNKNOWN_ID, f"unregistered ids {unknown or [body.target]}")
        if self.replay_cache.seen(msg.sender, body.ts, body.en_nonce.value, now):
            raise Terminated(TerminationReason.DUPLICATE, "Msg1 replay")
        if not self.registry.is_authorized(body.target, body.clients):
            raise Terminated(TerminationReason.UNAUTHORIZED, f"group not authorized for {body.target}")
        self.replay_cache.remember(msg.sender, body.ts, body.en_nonce.value, now)

        en2 = self.engine.new_en_nonce()
        session = ServerSession(
            role=Role.SERVER,
            leader=msg.sender,
            clients=list(body.clients),
            target=body.target
        )
        session.outstanding_challenges["en2"] = en2
        session.advance(Step.HGAKA_S2)
        session.timer = now + self.session_timeout
        self.sessions[msg.sender] = session
        self.state.advance(Step.HGAKA_S2)

        reply = self.engine.sym_encrypt(leader_key, pack_nonces(body.en_nonce, en2))
        logger.debug("Msg1 accepted", leader=msg.sender, nc=len(body.clients))
        return [ProtocolMessage(
            tag=MessageTag.HGAKA_MSG2,
            direction=Direction.RES,
            sender=self.entity_id,
            receiver=msg.sender,
            items=(PayloadItem.sym(reply, 256),)
        )]

    def _handle_group_token(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """S7: verify HM1 and issue credentials"""
        session = self.sessions.get(msg.sender)
        if session is None or session.phase is not Phase.ACTIVE:
            raise Rejected(TerminationReason.UNEXPECTED, "no open session for this leader")

        leader_key = self.registry.sym_key(msg.sender)
        echo, en3 = self.open_item(
            leader_key,
            msg.items[1],
            lambda data: unpack_nonces(data, NonceKind.EN, NonceKind.EN),
            2 * NONCE_BYTES
        )
        if not en_veri(session.outstanding_challenges["en2"], echo):
            raise Terminated(TerminationReason.EN_MISMATCH, "EnNonce2 echo")
        try:
            ok = hm_veri(
                self.engine,
                msg.items[0].data,
                session.clients,
                self.registry.sym_key,
                session.outstanding_challenges["en2"]
            )
        except UnknownClient as e:
            raise Terminated(TerminationReason.UNKNOWN_ID, str(e)) from e
        if not ok:
            raise Terminated(TerminationReason.HM_MISMATCH, "group token")

        items = self._issue_credentials(session, en3)
        session.advance(Step.HGAKA_S7)
        session.phase = Phase.COMPLETED
        session.timer = None
        session.closed_at = now
        self.state.advance(Step.HGAKA_S7)
        logger.info("Session key issued", leader=session.leader, nc=len(session.clients), target=session.target)
        return [ProtocolMessage(
            tag=MessageTag.HGAKA_MSG7,
            direction=Direction.RES,
            sender=self.entity_id,
            receiver=session.leader,
            items=tuple(items)
        )]

    def _issue_credentials(self, session: ServerSession, en3: Nonce) -> List[PayloadItem]:
        """Msg7 items: per-client shares, leader share, target package, package hash"""
        pub = self.registry.public_key(session.target)
        or_nonces = [self.engine.new_or_nonce(pub.n) for _ in session.clients]
        session_key = self.engine.new_session_key()
        session.session_key = session_key

        items = []
        for client, or_nonce in zip(session.clients[:-1], or_nonces):
            en_i = self.engine.new_en_nonce()
            session.outstanding_challenges[f"client:{client}"] = en_i
            body = ClientShareBody(or_nonce=or_nonce, en_nonce=en_i)
            ct = self.engine.sym_encrypt(self.registry.sym_key(client), body.to_bytes())
            items.append(PayloadItem.sym(ct, body.plain_bits))

        leader_body = LeaderShareBody(session_key=session_key, or_nonce=or_nonces[-1], en_nonce=en3)
        ct = self.engine.sym_encrypt(self.registry.sym_key(session.leader), leader_body.to_bytes())
        items.append(PayloadItem.sym(ct, leader_body.plain_bits))

        veri_token = EncAuthVeriToken.issue(self.engine, pub, or_nonces)
        package = TargetPackageBody(
            sealed_key=self.engine.sym_encrypt(self.registry.group_key(session.target), session_key.material),
            veri_token=veri_token.to_bytes(pub.byte_length)
        )
        sealed = self.engine.sym_encrypt(self.registry.sym_key(session.target), package.to_bytes())
        items.append(PayloadItem(
            kind=ItemKind.SYM,
            booked_bits=package_booked_bits(len(session.clients)),
            data=sealed
        ))
        items.append(PayloadItem.digest(self.engine.hash(package.digest_input())))
        return items

    def evict_closed(self, now: int) -> None:
        """
        Drop sessions that ended more than one replay window ago

        Terminal sessions without a close time (ended through terminate())
        are stamped on first sight. Evicted outcomes still count in summary().
        """
        for leader, session in list(self.sessions.items()):
            if session.phase not in (Phase.COMPLETED, Phase.TERMINATED):
                continue
            if session.closed_at is None:
                session.closed_at = now
            elif now - session.closed_at > self.retention:
                del self.sessions[leader]
                self.retired[session.phase] += 1
                if session.phase is Phase.TERMINATED:
                    self.retired_reason = session.reason
                logger.debug("AS session evicted", leader=leader, phase=session.phase.value)

    async def on_timeout(self, now: int) -> List[ProtocolMessage]:
        self.evict_closed(now)
        for session in self.sessions.values():
            if session.timer is not None and session.timer <= now:
                session.timer = None
                session.closed_at = now
                session.phase = Phase.TERMINATED
                session.reason = TerminationReason.TIMEOUT
                logger.warning("AS session timed out", leader=session.leader)
        return []

    def terminate(self, reason: TerminationReason, msg: Optional[ProtocolMessage]) -> None:
        if msg is None or msg.tag is not MessageTag.HGAKA_MSG6:
            return
        session = self.sessions.get(msg.sender)
        if session is not None and session.phase is Phase.ACTIVE:
            session.phase = Phase.TERMINATED
            session.reason = reason
            session.timer = None
            logger.warning("AS session terminated", leader=msg.sender, reason=reason.value)

    def summary(self) -> ActorSummary:
        result = super().summary()
        phases = [s.phase for s in self.sessions.values()]
        phases += [phase for phase, count in self.retired.items() if count]
        if Phase.COMPLETED in phases:
            result.phase = Phase.COMPLETED
        elif Phase.ACTIVE in phases:
            result.phase = Phase.ACTIVE
        elif Phase.TERMINATED in phases:
            result.phase = Phase.TERMINATED
            result.reason = next(
                (s.reason for s in self.sessions.values() if s.phase is Phase.TERMINATED),
                self.retired_reason
            )
        else:
            result.phase = Phase.IDLE
        return result
