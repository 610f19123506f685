"""
Base Actor - common machinery for the four protocol roles

Actors receive raw wire bytes from the network, return the messages they
emit, and expose a deadline the network turns into a timer event.
"""

from abc import ABC, abstractmethod
from typing import Callable, List, Optional, TypeVar

import structlog

from src.config import settings
from src.crypto import CryptoEngine, OpCounter, SymKey
from src.errors import (
    MalformedMessage,
    PaddingError,
    Rejected,
    Terminated,
    TerminationReason,
)
from src.actors.registry import KeyRegistry
from src.actors.session import ActorSummary, Phase, Rejection, Role, SessionState
from src.wire import PayloadItem, ProtocolMessage, parse

logger = structlog.get_logger()

T = TypeVar("T")


class BaseActor(ABC):
    """
    Base class for protocol actors

    Handlers raise Rejected to discard a message and Terminated to end the
    session; both are recorded with the operations spent on the message.
    """

    role: Role

    def __init__(
        self,
        entity_id: int,
        engine: CryptoEngine,
        registry: KeyRegistry,
        delta_t_ms: Optional[int] = None
    ) -> None:
        """
        Initialize actor

        Args:
            entity_id: 32-bit identifier
            engine: Crypto engine owned by this actor
            registry: This actor's view of the key registry
            delta_t_ms: Freshness window, defaults to settings.DELTA_T_MS
        """
        self.entity_id = entity_id
        self.engine = engine
        self.registry = registry
        self.delta_t = delta_t_ms if delta_t_ms is not None else settings.DELTA_T_MS
        self.state = SessionState(role=self.role)
        self.rejections: List[Rejection] = []

    # ------------------------------------------------------------------
    # Timers
    # ------------------------------------------------------------------

    @property
    def deadline(self) -> Optional[int]:
        """Logical time at which fire_timer should run, if any"""
        return self.state.timer

    @property
    def waiting(self) -> bool:
        return self.deadline is not None

    def arm_timer(self, now: int, delay: int) -> None:
        self.state.timer = now + delay

    def cancel_timer(self) -> None:
        self.state.timer = None

    # ------------------------------------------------------------------
    # Entry points used by the network
    # ------------------------------------------------------------------

    async def start(self, now: int) -> List[ProtocolMessage]:
        """Kick off the protocol; only the leader initiates"""
        return []

    async def deliver(self, raw: bytes, now: int) -> List[ProtocolMessage]:
        """
        Handle a message arriving from the network

        Args:
            raw: Wire bytes
            now: Logical time

        Returns:
            Messages to send
        """
        before = self.engine.snapshot()
        try:
            msg = parse(raw)
        except MalformedMessage as e:
            self._record(now, None, Rejected(TerminationReason.MALFORMED, str(e)), before)
            return []

        if msg.receiver != self.entity_id:
            self._record(now, msg, Rejected(TerminationReason.UNEXPECTED, "not addressed to me"), before)
            return []
        if self.state.phase is Phase.TERMINATED and not self.serves_after_termination:
            logger.debug("Message after termination ignored", actor=self.entity_id, tag=msg.tag.label)
            return []

        try:
            return await self.handle_message(msg, now)
        except Terminated as e:
            self._record(now, msg, e, before)
            self.terminate(e.reason, msg)
        except Rejected as e:
            self._record(now, msg, e, before)
        return []

    async def fire_timer(self, now: int) -> List[ProtocolMessage]:
        """Run the timeout handler once the deadline is reached"""
        before = self.engine.snapshot()
        try:
            return await self.on_timeout(now)
        except Terminated as e:
            self._record(now, None, e, before)
            self.terminate(e.reason, None)
        return []

    # ------------------------------------------------------------------
    # Hooks
    # ------------------------------------------------------------------

    @abstractmethod
    async def handle_message(self, msg: ProtocolMessage, now: int) -> List[ProtocolMessage]:
        """
        Handle a parsed message addressed to this actor

        Args:
            msg: Parsed message
            now: Logical time

        Returns:
            Messages to send
        """
        pass

    @abstractmethod
    async def on_timeout(self, now: int) -> List[ProtocolMessage]:
        """Handle an expired deadline"""
        pass

    @property
    def serves_after_termination(self) -> bool:
        """Servers keep answering new requests after a failed one"""
        return False

    def terminate(self, reason: TerminationReason, msg: Optional[ProtocolMessage]) -> None:
        self.state.phase = Phase.TERMINATED
        self.state.reason = reason
        self.cancel_timer()
        logger.warning(
            "Session terminated",
            actor=self.entity_id,
            role=self.role.value,
            reason=reason.value,
            step=self.state.step.value if self.state.step else None
        )

    def complete(self) -> None:
        self.state.phase = Phase.COMPLETED
        self.cancel_timer()
        logger.info("Session completed", actor=self.entity_id, role=self.role.value)

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def open_item(
        self,
        key: SymKey,
        item: PayloadItem,
        decode: Callable[[bytes], T],
        length: Optional[int] = None
    ) -> T:
        """
        Decrypt a symmetric item and decode its plaintext

        `length` is the plaintext size in bytes for fixed-size bodies.

        Raises:
            Terminated: decrypt-failure on bad padding or a malformed plaintext
        """
        try:
            return decode(self.engine.sym_decrypt(key, item.data, length))
        except (PaddingError, MalformedMessage, ValueError) as e:
            raise Terminated(TerminationReason.DECRYPT_FAILURE, str(e)) from e

    def _record(
        self,
        now: int,
        msg: Optional[ProtocolMessage],
        error: Rejected,
        before: OpCounter
    ) -> None:
        record = Rejection(
            time=now,
            tag=msg.tag if msg else None,
            sender=msg.sender if msg else None,
            reason=error.reason,
            detail=error.detail,
            terminated=isinstance(error, Terminated),
            ops=self.engine.snapshot() - before
        )
        self.rejections.append(record)
        logger.warning(
            "Message rejected" if msg else "Timer expired",
            actor=self.entity_id,
            role=self.role.value,
            reason=error.reason.value,
            tag=msg.tag.label if msg else None,
            sender=msg.sender if msg else None
        )

    def summary(self) -> ActorSummary:
        key = self.state.session_key
        return ActorSummary(
            entity_id=self.entity_id,
            role=self.role,
            phase=self.state.phase,
            step=self.state.step,
            reason=self.state.reason,
            counters={p: c.model_copy() for p, c in self.engine.counters.items()},
            session_key=key.material.hex() if key else None,
            issued_nonces=[n.value.hex() for n in self.engine.issued],
            rejections=list(self.rejections)
        )
