"""
Adversary - scriptable Dolev-Yao attacker on the open channel

The adversary sees every message. Rules match on (tag, sender, receiver,
hop). Side-effect actions (observe, replay, inject) all fire; the first
matching disposition (pass, drop, delay, tamper) decides what happens to
the original. Rules may carry an application limit.
"""

from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field
import structlog

from src.actors.registry import GroupConfig, KeyRegistry
from src.crypto import RandomSource
from src.wire import MessageTag, PayloadItem, ProtocolMessage, serialize

logger = structlog.get_logger()


class AdversaryAction(str, Enum):
    """What the adversary does with a message"""
    PASS = "pass"
    DROP = "drop"
    DELAY = "delay"
    TAMPER = "tamper"
    REPLAY = "replay"
    INJECT = "inject"
    OBSERVE = "observe"


DISPOSITIONS = frozenset({
    AdversaryAction.PASS,
    AdversaryAction.DROP,
    AdversaryAction.DELAY,
    AdversaryAction.TAMPER,
})


class MessageMatch(BaseModel):
    """Predicate on message headers; unset fields match anything"""

    tag: Optional[MessageTag] = None
    sender: Optional[int] = None
    receiver: Optional[int] = None
    hop: Optional[int] = None

    model_config = ConfigDict(frozen=True)

    def matches(self, msg: ProtocolMessage) -> bool:
        return (
            (self.tag is None or msg.tag is self.tag)
            and (self.sender is None or msg.sender == self.sender)
            and (self.receiver is None or msg.receiver == self.receiver)
            and (self.hop is None or msg.hop == self.hop)
        )


class AdversaryContext(BaseModel):
    """What a forging callable may use"""

    now: int
    trigger: Optional[ProtocolMessage] = None
    config: GroupConfig
    keys: KeyRegistry = Field(..., description="Keys granted by the script")
    rng: RandomSource
    observed: List[ProtocolMessage] = Field(default_factory=list)

    model_config = ConfigDict(arbitrary_types_allowed=True)


BuildFn = Callable[[AdversaryContext], ProtocolMessage]


class AdversaryRule(BaseModel):
    """One scripted rule"""

    match: MessageMatch = Field(default_factory=MessageMatch)
    action: AdversaryAction
    delay_ms: int = Field(0, ge=0, description="DELAY extra latency or REPLAY offset")
    item_index: Optional[int] = Field(None, description="TAMPER item (negative counts from the end); None edits raw bytes")
    offset: int = Field(0, ge=0, description="TAMPER byte offset")
    xor_mask: int = Field(0x01, ge=1, le=0xFF)
    limit: Optional[int] = Field(None, ge=1, description="Maximum applications")
    build: Optional[BuildFn] = Field(None, exclude=True, description="INJECT forging callable")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class ScheduledInjection(BaseModel):
    """Messages forged independently of any observed traffic"""

    at_ms: int = Field(..., ge=0)
    build: BuildFn = Field(..., exclude=True)
    count: int = Field(1, ge=1)
    spacing_ms: int = Field(0, ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class AdversaryScript(BaseModel):
    """Immutable attack description; hit counts live in the Adversary"""

    name: str = "honest"
    rules: List[AdversaryRule] = Field(default_factory=list)
    injections: List[ScheduledInjection] = Field(default_factory=list)
    granted_keys: List[int] = Field(default_factory=list, description="Entities whose long-term keys leak")

    model_config = ConfigDict(frozen=True)


class Interception(BaseModel):
    """Outcome of passing one honest message through the adversary"""

    action: AdversaryAction = AdversaryAction.PASS
    extra_delay: int = 0
    delivered: Optional[bytes] = Field(None, description="Bytes to deliver; None when dropped")
    spawned: List[Tuple[AdversaryAction, int, ProtocolMessage]] = Field(
        default_factory=list,
        description="(action, delay from now, message) for replays and injections"
    )

    model_config = ConfigDict(arbitrary_types_allowed=True)


def tamper(msg: ProtocolMessage, raw: bytes, rule: AdversaryRule) -> bytes:
    """Flip bits of one byte, either in an item or in the raw encoding"""
    if rule.item_index is None:
        if rule.offset >= len(raw):
            return raw
        edited = bytearray(raw)
        edited[rule.offset] ^= rule.xor_mask
        return bytes(edited)

    items = list(msg.items)
    item = items[rule.item_index]
    data = bytearray(item.data)
    data[rule.offset % len(data)] ^= rule.xor_mask
    items[rule.item_index] = PayloadItem(kind=item.kind, booked_bits=item.booked_bits, data=bytes(data))
    return serialize(msg.model_copy(update={"items": tuple(items)}))


class Adversary:
    """
    Runtime state of one script within one run
    """

    def __init__(
        self,
        script: AdversaryScript,
        config: GroupConfig,
        registry: KeyRegistry,
        rng: RandomSource
    ) -> None:
        """
        Initialize adversary

        Args:
            script: Rules to apply
            config: Group under attack
            registry: Full registry; only granted keys are exposed
            rng: Source for forged values
        """
        self.script = script
        self.config = config
        self.keys = registry.granted(script.granted_keys)
        self.rng = rng
        self.hits: Dict[int, int] = {}
        self.observed: List[ProtocolMessage] = []

    def context(self, now: int, trigger: Optional[ProtocolMessage] = None) -> AdversaryContext:
        return AdversaryContext(
            now=now,
            trigger=trigger,
            config=self.config,
            keys=self.keys,
            rng=self.rng,
            observed=list(self.observed)
        )

    def _available(self, index: int, rule: AdversaryRule) -> bool:
        return rule.limit is None or self.hits.get(index, 0) < rule.limit

    def intercept(self, msg: ProtocolMessage, raw: bytes, now: int) -> Interception:
        """
        Apply the script to one honest message

        Args:
            msg: Message as sent
            raw: Its wire bytes
            now: Send time

        Returns:
            Disposition of the original plus any spawned messages
        """
        self.observed.append(msg)
        result = Interception(delivered=raw)
        observed_by_rule = False
        disposed = False

        for index, rule in enumerate(self.script.rules):
            if not rule.match.matches(msg) or not self._available(index, rule):
                continue

            if rule.action in DISPOSITIONS:
                if disposed:
                    continue
                disposed = True
                self.hits[index] = self.hits.get(index, 0) + 1
                result.action = rule.action
                if rule.action is AdversaryAction.DROP:
                    result.delivered = None
                elif rule.action is AdversaryAction.DELAY:
                    result.extra_delay = rule.delay_ms
                elif rule.action is AdversaryAction.TAMPER:
                    result.delivered = tamper(msg, raw, rule)
                continue

            self.hits[index] = self.hits.get(index, 0) + 1
            if rule.action is AdversaryAction.OBSERVE:
                observed_by_rule = True
            elif rule.action is AdversaryAction.REPLAY:
                result.spawned.append((AdversaryAction.REPLAY, rule.delay_ms, msg))
            elif rule.action is AdversaryAction.INJECT and rule.build is not None:
                forged = rule.build(self.context(now, msg))
                result.spawned.append((AdversaryAction.INJECT, rule.delay_ms, forged))

        if not disposed and observed_by_rule:
            result.action = AdversaryAction.OBSERVE
        if result.action is not AdversaryAction.PASS:
            logger.debug("Adversary acted", action=result.action.value, message=msg.describe())
        return result

    def scheduled(self) -> List[Tuple[int, ScheduledInjection]]:
        """(send time, injection) for every scheduled forged message"""
        return [
            (injection.at_ms + i * injection.spacing_ms, injection)
            for injection in self.script.injections
            for i in range(injection.count)
        ]
