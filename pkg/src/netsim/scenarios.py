"""
Threat scenarios - scripted attacks with their expected outcomes

Each scenario builds an AdversaryScript for a group, runs it and checks the
transcript. The suite covers impersonation of each role, forged HM chains,
eavesdropping, replay of both request messages and DoS attempts that must
be rejected cheaply.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Set, Tuple, Type

from pydantic import BaseModel, Field
import structlog

from src.actors import (
    GroupConfig,
    KeyRegistry,
    Phase,
    Rejection,
    ReplayCache,
)
from src.actors.session import ActorSummary
from src.crypto import DeterministicRandom, KeySize
from src.errors import TerminationReason
from src.netsim.adversary import (
    AdversaryAction,
    AdversaryContext,
    AdversaryRule,
    AdversaryScript,
    MessageMatch,
    ScheduledInjection,
)
from src.netsim.network import ReplayCacheFactory, run
from src.netsim.transcript import RunTranscript
from src.wire import Direction, MessageTag, PayloadItem, ProtocolMessage

logger = structlog.get_logger()

REPLAY_DELAY_MS = 100
FLOOD_SIZE = 100


class ScenarioResult(BaseModel):
    """Outcome of one scenario at one group size"""

    name: str
    nc: int
    seed: int
    passed: bool
    expected: str
    observed: str = Field("", description="What the check found")
    messages: int = 0


def random_ciphertext(ctx: AdversaryContext, plain_bytes: int) -> bytes:
    """Random bytes shaped like a padded AES-CBC ciphertext of plain_bytes"""
    return ctx.rng.random_bytes(16 * (plain_bytes // 16 + 1))


def rejections_for(actor: ActorSummary, tag: MessageTag) -> List[Rejection]:
    return [r for r in actor.rejections if r.tag is tag]


class ThreatScenario(ABC):
    """
    Base class for one scripted attack
    """

    name: str = ""
    description: str = ""
    expected: str = ""

    @abstractmethod
    def script(self, config: GroupConfig) -> AdversaryScript:
        """Adversary behaviour for this group"""
        pass

    @abstractmethod
    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        """
        Judge a finished run

        Returns:
            (passed, what was observed)
        """
        pass

    async def execute(
        self,
        nc: int,
        seed: int = 0,
        key_size: KeySize = KeySize.TEST_512,
        replay_cache_factory: ReplayCacheFactory = ReplayCache,
        registry: Optional[KeyRegistry] = None,
        delta_t_ms: Optional[int] = None
    ) -> Tuple[ScenarioResult, RunTranscript]:
        """
        Provision keys, run the script and check the result

        Args:
            nc: Group size
            seed: Run seed; key provisioning uses the same seed
            key_size: RSA preset
            replay_cache_factory: Replay cache used by AS and target
            registry: Reuse provisioned keys
            delta_t_ms: Freshness window

        Returns:
            Scenario result and the transcript it was judged on
        """
        config = GroupConfig.sequential(nc)
        if registry is None:
            registry = KeyRegistry.provision(config, key_size, DeterministicRandom(seed).fork("keys"))
        transcript = await run(
            config,
            registry,
            self.script(config),
            seed,
            delta_t_ms=delta_t_ms,
            replay_cache_factory=replay_cache_factory
        )
        passed, observed = self.check(transcript, registry)
        logger.info("Scenario checked", scenario=self.name, nc=nc, passed=passed, observed=observed)
        result = ScenarioResult(
            name=self.name,
            nc=nc,
            seed=seed,
            passed=passed,
            expected=self.expected,
            observed=observed,
            messages=len(transcript.entries)
        )
        return result, transcript


def _completion(transcript: RunTranscript) -> Tuple[bool, str]:
    if transcript.group_completed():
        return True, "group completed with a shared SK"
    phases = ", ".join(f"{a.entity_id}:{a.phase.value}" for a in transcript.members)
    return False, f"group did not complete ({phases}; target {transcript.target.phase.value})"


def _reason_check(
    actor: ActorSummary,
    tag: MessageTag,
    accepted: Set[TerminationReason]
) -> Tuple[bool, str]:
    reasons = {r.reason for r in rejections_for(actor, tag)}
    hit = reasons & accepted
    if hit:
        return True, f"{actor.role.value} rejected {tag.label} with {sorted(r.value for r in hit)}"
    return False, f"{actor.role.value} reasons for {tag.label}: {sorted(r.value for r in reasons)}"


def _both(*checks: Tuple[bool, str]) -> Tuple[bool, str]:
    return all(ok for ok, _ in checks), "; ".join(text for _, text in checks)


class HonestRun(ThreatScenario):
    name = "honest"
    description = "No adversary action"
    expected = "all members and the target complete with one shared SK"

    def script(self, config: GroupConfig) -> AdversaryScript:
        return AdversaryScript(name=self.name)

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        return _completion(transcript)


class ClientImpersonation(ThreatScenario):
    name = "client-impersonation"
    description = "Msg1 forged under the leader's id without its long-term key"
    expected = "AS terminates the forged attempt; the honest run completes"

    def script(self, config: GroupConfig) -> AdversaryScript:
        def forge(ctx: AdversaryContext) -> ProtocolMessage:
            return ProtocolMessage(
                tag=MessageTag.HGAKA_MSG1,
                direction=Direction.REQ,
                sender=ctx.config.leader,
                receiver=ctx.config.as_id,
                items=(PayloadItem.sym(random_ciphertext(ctx, 4 * ctx.config.nc + 24), 32 * ctx.config.nc + 192),)
            )

        return AdversaryScript(name=self.name, injections=[ScheduledInjection(at_ms=5, build=forge)])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        accepted = {
            TerminationReason.DECRYPT_FAILURE,
            TerminationReason.STALE,
            TerminationReason.ID_MISMATCH,
            TerminationReason.UNKNOWN_ID,
        }
        return _both(
            _reason_check(transcript.server, MessageTag.HGAKA_MSG1, accepted),
            _completion(transcript)
        )


class HmForgery(ThreatScenario):
    name = "hm-forgery"
    description = "First chain hop tampered so the folded HM token is wrong"
    expected = "AS terminates with hm-mismatch; no member obtains an SK"

    def script(self, config: GroupConfig) -> AdversaryScript:
        return AdversaryScript(name=self.name, rules=[
            AdversaryRule(
                match=MessageMatch(tag=MessageTag.HGAKA_CHAIN, hop=0),
                action=AdversaryAction.TAMPER,
                item_index=0,
                limit=1
            ),
        ])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        rejected = _reason_check(transcript.server, MessageTag.HGAKA_MSG6, {TerminationReason.HM_MISMATCH})
        holders = [m.entity_id for m in transcript.members if m.session_key is not None]
        no_key = (not holders, "no member holds an SK" if not holders else f"members {holders} hold an SK")
        return _both(rejected, no_key)


class AsImpersonation(ThreatScenario):
    name = "as-impersonation"
    description = "Forged Msg2 races the AS reply to the leader"
    expected = "leader terminates with decrypt-failure or en-mismatch"

    def script(self, config: GroupConfig) -> AdversaryScript:
        def forge(ctx: AdversaryContext) -> ProtocolMessage:
            return ProtocolMessage(
                tag=MessageTag.HGAKA_MSG2,
                direction=Direction.RES,
                sender=ctx.config.as_id,
                receiver=ctx.config.leader,
                items=(PayloadItem.sym(random_ciphertext(ctx, 32), 256),)
            )

        return AdversaryScript(name=self.name, rules=[
            AdversaryRule(
                match=MessageMatch(tag=MessageTag.HGAKA_MSG1),
                action=AdversaryAction.INJECT,
                build=forge,
                limit=1
            ),
        ])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        leader = transcript.leader
        accepted = {TerminationReason.DECRYPT_FAILURE, TerminationReason.EN_MISMATCH}
        ok = leader.phase is Phase.TERMINATED and leader.reason in accepted and leader.session_key is None
        return ok, f"leader {leader.phase.value} ({leader.reason.value if leader.reason else 'no reason'})"


class TargetImpersonation(ThreatScenario):
    name = "target-impersonation"
    description = "Forged HGA Msg2 races the target reply to the leader"
    expected = "leader terminates; no client completes HGA"

    def script(self, config: GroupConfig) -> AdversaryScript:
        def forge(ctx: AdversaryContext) -> ProtocolMessage:
            deliveries = tuple(
                PayloadItem.sym(random_ciphertext(ctx, 32), 256)
                for _ in range(ctx.config.nc - 1)
            )
            return ProtocolMessage(
                tag=MessageTag.HGA_MSG2,
                direction=Direction.RES,
                sender=ctx.config.target,
                receiver=ctx.config.leader,
                items=(PayloadItem.sym(random_ciphertext(ctx, 16), 128), *deliveries)
            )

        return AdversaryScript(name=self.name, rules=[
            AdversaryRule(
                match=MessageMatch(tag=MessageTag.HGA_MSG1),
                action=AdversaryAction.INJECT,
                build=forge,
                limit=1
            ),
        ])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        leader = transcript.leader
        completed = [c.entity_id for c in transcript.clients if c.phase is Phase.COMPLETED]
        ok = leader.phase is Phase.TERMINATED and not completed
        return ok, f"leader {leader.phase.value}; completed clients {completed}"


class Eavesdrop(ThreatScenario):
    name = "eavesdrop"
    description = "Passive observation of every message"
    expected = "no SK, nonce or long-term key appears in observed bytes"

    def script(self, config: GroupConfig) -> AdversaryScript:
        return AdversaryScript(name=self.name, rules=[AdversaryRule(action=AdversaryAction.OBSERVE)])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        secrets: Dict[str, bytes] = {}
        for actor in transcript.actors.values():
            if actor.session_key:
                secrets[f"SK@{actor.entity_id}"] = bytes.fromhex(actor.session_key)
            for i, nonce in enumerate(actor.issued_nonces):
                secrets[f"nonce{i}@{actor.entity_id}"] = bytes.fromhex(nonce)
        for entity, key in registry.sym_keys.items():
            secrets[f"K@{entity}"] = key.material
        for target, key in registry.group_keys.items():
            secrets[f"KG@{target}"] = key.material

        observed = transcript.observed_bytes()
        leaked = sorted(label for label, secret in secrets.items() if any(secret in raw for raw in observed))
        leak_check = (not leaked, f"checked {len(secrets)} secrets, leaked {leaked}")
        return _both(leak_check, _completion(transcript))


class ReplayScenario(ThreatScenario):
    """Replays one request message after REPLAY_DELAY_MS"""

    tag: MessageTag

    def script(self, config: GroupConfig) -> AdversaryScript:
        return AdversaryScript(name=self.name, rules=[
            AdversaryRule(
                match=MessageMatch(tag=self.tag),
                action=AdversaryAction.REPLAY,
                delay_ms=REPLAY_DELAY_MS,
                limit=1
            ),
        ])

    def receiver(self, transcript: RunTranscript) -> ActorSummary:
        return transcript.server if self.tag is MessageTag.HGAKA_MSG1 else transcript.target

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        return _both(
            _reason_check(self.receiver(transcript), self.tag, {TerminationReason.DUPLICATE}),
            _completion(transcript)
        )


class ReplayMsg1(ReplayScenario):
    name = "replay-msg1"
    description = "HGAKA Msg1 replayed within the freshness window"
    expected = "AS rejects the copy as duplicate; the run completes"
    tag = MessageTag.HGAKA_MSG1


class ReplayHgaMsg1(ReplayScenario):
    name = "replay-hga-msg1"
    description = "HGA Msg1 replayed within the freshness window"
    expected = "target rejects the copy as duplicate; the run completes"
    tag = MessageTag.HGA_MSG1


class DosFlood(ThreatScenario):
    name = "dos-flood"
    description = f"{FLOOD_SIZE} garbage Msg1 under the leader's id"
    expected = "each is rejected after at most one symmetric decryption; the run completes"

    def script(self, config: GroupConfig) -> AdversaryScript:
        def forge(ctx: AdversaryContext) -> ProtocolMessage:
            return ProtocolMessage(
                tag=MessageTag.HGAKA_MSG1,
                direction=Direction.REQ,
                sender=ctx.config.leader,
                receiver=ctx.config.as_id,
                items=(PayloadItem.sym(random_ciphertext(ctx, 4 * ctx.config.nc + 24), 32 * ctx.config.nc + 192),)
            )

        return AdversaryScript(name=self.name, injections=[
            ScheduledInjection(at_ms=1, build=forge, count=FLOOD_SIZE, spacing_ms=1),
        ])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        rejections = rejections_for(transcript.server, MessageTag.HGAKA_MSG1)
        costly = [
            r for r in rejections
            if r.ops.se > 1 or r.ops.ae or r.ops.ad or r.ops.h or r.ops.hmac
        ]
        cheap = (
            len(rejections) == FLOOD_SIZE and not costly,
            f"{len(rejections)} rejections, {len(costly)} above one symmetric decryption"
        )
        return _both(cheap, _completion(transcript))


class DosHashMismatch(ThreatScenario):
    name = "dos-hash-mismatch"
    description = "Package digest of HGA Msg1 corrupted once"
    expected = "target rejects before any RSA operation; the leader's resend completes"

    def script(self, config: GroupConfig) -> AdversaryScript:
        return AdversaryScript(name=self.name, rules=[
            AdversaryRule(
                match=MessageMatch(tag=MessageTag.HGA_MSG1),
                action=AdversaryAction.TAMPER,
                item_index=-1,
                limit=1
            ),
        ])

    def check(self, transcript: RunTranscript, registry: KeyRegistry) -> Tuple[bool, str]:
        mismatches = [
            r for r in rejections_for(transcript.target, MessageTag.HGA_MSG1)
            if r.reason is TerminationReason.HASH_MISMATCH
        ]
        no_rsa = bool(mismatches) and all(r.ops.ad == 0 and r.ops.ae == 0 for r in mismatches)
        rejected = (no_rsa, f"{len(mismatches)} hash-mismatch rejections without RSA: {no_rsa}")
        return _both(rejected, _completion(transcript))


_SCENARIOS: List[Type[ThreatScenario]] = [
    ClientImpersonation,
    HmForgery,
    AsImpersonation,
    TargetImpersonation,
    Eavesdrop,
    ReplayMsg1,
    ReplayHgaMsg1,
    DosFlood,
    DosHashMismatch,
]


def scenario_suite() -> List[ThreatScenario]:
    """Every threat scenario, in execution order"""
    return [factory() for factory in _SCENARIOS]


def scenario_names() -> List[str]:
    return [HonestRun.name, *(factory.name for factory in _SCENARIOS)]


def get_scenario(name: str) -> ThreatScenario:
    """
    Look a scenario up by name

    Raises:
        KeyError: Unknown name
    """
    for scenario in [HonestRun(), *scenario_suite()]:
        if scenario.name == name:
            return scenario
    raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
