"""
Network - discrete-event simulation of the open channel

A single loop pops events from a heap ordered by (time, sequence). Ties
are broken by insertion order, so delivery between any two actors is FIFO
and a run is fully determined by its seed and script.
"""

from enum import IntEnum
import heapq
from typing import Any, Callable, Dict, List, Optional, Tuple

import structlog

from src.actors import (
    AuthenticationServer,
    BaseActor,
    GroupClient,
    GroupConfig,
    GroupLeader,
    KeyRegistry,
    ReplayCache,
    TargetDevice,
)
from src.config import settings
from src.crypto import CryptoEngine, DeterministicRandom, RandomSource
from src.errors import Deadlock
from src.netsim.adversary import Adversary, AdversaryAction, AdversaryScript
from src.netsim.clock import LogicalClock
from src.netsim.transcript import RunTranscript, TranscriptEntry
from src.wire import ProtocolMessage, payload_bits, serialize, wire_bits

logger = structlog.get_logger()

ReplayCacheFactory = Callable[[int], ReplayCache]


class EventKind(IntEnum):
    """Scheduler event types"""
    START = 0
    DELIVER = 1
    TIMER = 2
    INJECT = 3


Event = Tuple[int, int, EventKind, Any]


class Network:
    """
    Event scheduler, router and transcript recorder
    """

    def __init__(
        self,
        clock: Optional[LogicalClock] = None,
        adversary: Optional[Adversary] = None
    ) -> None:
        """
        Initialize network

        Args:
            clock: Logical clock and latency model
            adversary: Attacker applied to every honest message
        """
        self.clock = clock or LogicalClock()
        self.adversary = adversary
        self.actors: Dict[int, BaseActor] = {}
        self.entries: List[TranscriptEntry] = []
        self._events: List[Event] = []
        self._seq = 0
        self._timers: Dict[int, int] = {}

    def register(self, actor: BaseActor) -> None:
        if actor.entity_id in self.actors:
            raise ValueError(f"entity {actor.entity_id} registered twice")
        self.actors[actor.entity_id] = actor

    def schedule(self, time: int, kind: EventKind, payload: Any) -> None:
        heapq.heappush(self._events, (time, self._seq, kind, payload))
        self._seq += 1

    # ------------------------------------------------------------------
    # Sending
    # ------------------------------------------------------------------

    def _record(
        self,
        msg: ProtocolMessage,
        raw: bytes,
        deliver_at: Optional[int],
        action: AdversaryAction,
        honest: bool,
        delivered: Optional[bytes] = None
    ) -> None:
        self.entries.append(TranscriptEntry(
            time=self.clock.now,
            deliver_at=deliver_at,
            tag=msg.tag,
            hop=msg.hop,
            sender=msg.sender,
            receiver=msg.receiver,
            action=action,
            honest=honest,
            raw=raw,
            delivered=delivered if delivered != raw else None,
            payload_bits=payload_bits(msg),
            wire_bits=wire_bits(msg)
        ))

    def send(self, msg: ProtocolMessage) -> None:
        """Put an honest message on the channel"""
        now = self.clock.now
        raw = serialize(msg)
        latency = self.clock.latency(msg.sender, msg.receiver)

        if self.adversary is None:
            self._record(msg, raw, now + latency, AdversaryAction.PASS, True)
            self.schedule(now + latency, EventKind.DELIVER, (msg.receiver, raw))
            return

        outcome = self.adversary.intercept(msg, raw, now)
        if outcome.delivered is None:
            self._record(msg, raw, None, outcome.action, True)
        else:
            arrival = now + latency + outcome.extra_delay
            self._record(msg, raw, arrival, outcome.action, True, outcome.delivered)
            self.schedule(arrival, EventKind.DELIVER, (msg.receiver, outcome.delivered))

        for action, delay, spawned in outcome.spawned:
            self.schedule(now + delay, EventKind.INJECT, (action, spawned))

    def _inject(self, action: AdversaryAction, msg: ProtocolMessage) -> None:
        """Put an adversary-originated message on the channel"""
        raw = serialize(msg)
        arrival = self.clock.now + self.clock.latency(msg.sender, msg.receiver)
        self._record(msg, raw, arrival, action, False)
        self.schedule(arrival, EventKind.DELIVER, (msg.receiver, raw))

    def schedule_injections(self) -> None:
        if self.adversary is None:
            return
        for at, injection in self.adversary.scheduled():
            self.schedule(at, EventKind.INJECT, (AdversaryAction.INJECT, injection.build))

    # ------------------------------------------------------------------
    # Loop
    # ------------------------------------------------------------------

    def _sync_timer(self, actor: BaseActor) -> None:
        """Schedule a TIMER event whenever the actor's deadline changes"""
        deadline = actor.deadline
        if deadline is None:
            self._timers.pop(actor.entity_id, None)
            return
        if self._timers.get(actor.entity_id) != deadline:
            self._timers[actor.entity_id] = deadline
            self.schedule(max(deadline, self.clock.now), EventKind.TIMER, actor.entity_id)

    def _dispatch(self, outgoing: List[ProtocolMessage], actor: BaseActor) -> None:
        for msg in outgoing:
            self.send(msg)
        self._sync_timer(actor)

    async def start(self, initiator: int) -> None:
        self.schedule(self.clock.now, EventKind.START, initiator)

    async def run(self, until: Optional[int] = None) -> int:
        """
        Process events until the heap drains

        Args:
            until: Stop before any event later than this time

        Returns:
            Time of the last processed event

        Raises:
            Deadlock: An actor still waits but nothing is scheduled
        """
        while self._events:
            time, _, kind, payload = self._events[0]
            if until is not None and time > until:
                break
            heapq.heappop(self._events)
            self.clock.advance_to(time)

            if kind is EventKind.START:
                actor = self.actors[payload]
                self._dispatch(await actor.start(time), actor)

            elif kind is EventKind.DELIVER:
                receiver, raw = payload
                actor = self.actors.get(receiver)
                if actor is None:
                    logger.debug("Message for unknown entity dropped", receiver=receiver)
                    continue
                self._dispatch(await actor.deliver(raw, time), actor)

            elif kind is EventKind.TIMER:
                actor = self.actors[payload]
                if self._timers.get(payload) != time or actor.deadline != time:
                    continue
                self._timers.pop(payload)
                self._dispatch(await actor.fire_timer(time), actor)

            elif kind is EventKind.INJECT:
                action, message = payload
                if callable(message):
                    message = message(self.adversary.context(time))
                self._inject(action, message)

        if until is None:
            stuck = [a.entity_id for a in self.actors.values() if a.waiting]
            if stuck:
                raise Deadlock(f"actors {stuck} wait with no pending events")
        return self.clock.now

    def transcript(self, seed: int, nc: int, scenario: str = "honest") -> RunTranscript:
        return RunTranscript(
            seed=seed,
            nc=nc,
            scenario=scenario,
            entries=list(self.entries),
            actors={i: a.summary() for i, a in sorted(self.actors.items())},
            ended_at=self.clock.now
        )


def build_network(
    config: GroupConfig,
    registry: KeyRegistry,
    rng: RandomSource,
    script: Optional[AdversaryScript] = None,
    *,
    delta_t_ms: Optional[int] = None,
    latency_ms: Optional[int] = None,
    replay_cache_factory: ReplayCacheFactory = ReplayCache,
    continue_to_hga: bool = True
) -> Network:
    """
    Wire up one AS, one leader, nc-1 clients and one target

    Each actor gets its own engine seeded from `rng` by label, so adding an
    adversary does not perturb honest randomness.
    """
    delta_t = delta_t_ms if delta_t_ms is not None else settings.DELTA_T_MS
    window = settings.REPLAY_WINDOW_FACTOR * delta_t

    def engine(entity_id: int) -> CryptoEngine:
        return CryptoEngine(rng.fork(f"actor:{entity_id}"))

    adversary = None
    if script is not None:
        adversary = Adversary(script, config, registry, rng.fork("adversary"))
    network = Network(LogicalClock(default_latency_ms=latency_ms), adversary)

    network.register(AuthenticationServer(
        config.as_id,
        engine(config.as_id),
        registry.for_server(),
        delta_t,
        replay_cache=replay_cache_factory(window)
    ))
    network.register(GroupLeader(
        config,
        engine(config.leader),
        registry.for_client(config.leader),
        delta_t,
        continue_to_hga=continue_to_hga
    ))
    for client in config.clients[:-1]:
        network.register(GroupClient(
            client,
            config,
            engine(client),
            registry.for_client(client),
            delta_t,
            continue_to_hga=continue_to_hga
        ))
    network.register(TargetDevice(
        config.target,
        engine(config.target),
        registry.for_target(config.target),
        delta_t,
        replay_cache=replay_cache_factory(window)
    ))
    return network


async def run(
    config: GroupConfig,
    registry: KeyRegistry,
    script: Optional[AdversaryScript] = None,
    seed: int = 0,
    *,
    delta_t_ms: Optional[int] = None,
    latency_ms: Optional[int] = None,
    replay_cache_factory: ReplayCacheFactory = ReplayCache,
    continue_to_hga: bool = True
) -> RunTranscript:
    """
    Execute HGAKA (and by default HGA) once

    Args:
        config: Group membership
        registry: Provisioned keys
        script: Adversary script; None runs without an adversary
        seed: Seed for every actor's randomness
        delta_t_ms: Freshness window
        latency_ms: Per-hop latency
        replay_cache_factory: Builds the AS and target replay caches from a window
        continue_to_hga: Run HGA after HGAKA completes

    Returns:
        Transcript of the run
    """
    network = build_network(
        config,
        registry,
        DeterministicRandom(seed),
        script,
        delta_t_ms=delta_t_ms,
        latency_ms=latency_ms,
        replay_cache_factory=replay_cache_factory,
        continue_to_hga=continue_to_hga
    )
    network.schedule_injections()
    await network.start(config.leader)
    await network.run()

    name = script.name if script is not None else "honest"
    transcript = network.transcript(seed, config.nc, name)
    logger.info(
        "Run finished",
        scenario=name,
        nc=config.nc,
        seed=seed,
        messages=len(transcript.entries),
        ended_at=transcript.ended_at
    )
    return transcript
