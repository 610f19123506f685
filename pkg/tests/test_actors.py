"""
Tests for the protocol actors, key registry and replay cache
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from src.actors import (
    AuthenticationServer,
    DisabledReplayCache,
    GroupClient,
    GroupConfig,
    KeyRegistry,
    Phase,
    ReplayCache,
    Role,
    SessionState,
    Step,
    TargetDevice,
)
from src.actors.auth_server import ServerSession
from src.crypto import CryptoEngine, DeterministicRandom, Protocol
from src.errors import ConfigError, TerminationReason, UnknownClient
from src.netsim import AdversaryAction, AdversaryRule, AdversaryScript, MessageMatch, run
from src.wire import Direction, MessageTag, PayloadItem, ProtocolMessage, serialize


def _server(registry: KeyRegistry) -> AuthenticationServer:
    return AuthenticationServer(1, CryptoEngine(DeterministicRandom("as")), registry.for_server(), 5000)


def test_group_config_validation() -> None:
    """Test group size and distinct role ids"""
    with pytest.raises(ValidationError):
        GroupConfig.sequential(1)
    with pytest.raises(ValidationError):
        GroupConfig(clients=[101, 102], target=102, as_id=1)
    with pytest.raises(ValidationError):
        GroupConfig(clients=[101, 101], target=900, as_id=1)
    config = GroupConfig.sequential(4)
    assert config.leader == 104
    assert config.nc == 4


def test_registry_views(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test each role sees only its own keys"""
    client = registry.for_client(101)
    assert set(client.sym_keys) == {101}
    assert not client.group_keys and not client.target_keypairs
    with pytest.raises(UnknownClient):
        client.sym_key(102)

    server = registry.for_server()
    assert set(server.sym_keys) == {101, 102, 103, 900}
    assert not server.target_keypairs

    target = registry.for_target(group.target)
    assert set(target.sym_keys) == {900}
    assert target.keypair(900).n == registry.public_key(900).n


def test_registry_authorization(registry: KeyRegistry) -> None:
    """Test the default table authorizes exactly the provisioned group"""
    assert registry.is_authorized(900, [103, 101, 102])
    assert not registry.is_authorized(900, [101, 102])
    assert not registry.is_authorized(901, [101, 102, 103])


def test_load_authorizations(tmp_path: Path) -> None:
    """Test reading the authorization table"""
    table = tmp_path / "auth.json"
    table.write_text('{"900": [[101, 102], [101, 102, 103]]}')
    assert KeyRegistry.load_authorizations(str(table)) == {900: [[101, 102], [101, 102, 103]]}
    table.write_text("not json")
    with pytest.raises(ConfigError):
        KeyRegistry.load_authorizations(str(table))


def test_replay_cache_window() -> None:
    """Test duplicates inside the window and expiry after it"""
    cache = ReplayCache(window_ms=100)
    assert cache.check_and_store(101, 5, b"n", now=0)
    assert not cache.check_and_store(101, 5, b"n", now=50)
    assert cache.check_and_store(101, 6, b"n", now=50)
    assert cache.check_and_store(101, 5, b"n", now=200)


def test_disabled_replay_cache() -> None:
    """Test the negative control never reports a duplicate"""
    cache = DisabledReplayCache(window_ms=100)
    assert cache.check_and_store(101, 5, b"n", now=0)
    assert cache.check_and_store(101, 5, b"n", now=1)
    assert len(cache) == 0


def test_steps_never_go_back() -> None:
    """Test session steps are monotone"""
    state = SessionState(role=Role.LEADER)
    state.advance(Step.HGAKA_S3)
    assert state.phase is Phase.ACTIVE
    with pytest.raises(ValueError):
        state.advance(Step.HGAKA_S1)


def test_client_must_be_non_leader(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test the leader cannot be built as a plain client"""
    with pytest.raises(ValueError):
        GroupClient(103, group, CryptoEngine(DeterministicRandom(1)), registry.for_client(103))


@pytest.mark.asyncio
async def test_malformed_bytes_rejected(registry: KeyRegistry) -> None:
    """Test garbage is rejected without changing the server state"""
    server = _server(registry)
    assert await server.deliver(b"\x01\x02", 0) == []
    assert server.rejections[0].reason is TerminationReason.MALFORMED
    assert server.summary().phase is Phase.IDLE


@pytest.mark.asyncio
async def test_unexpected_tag_rejected(registry: KeyRegistry) -> None:
    """Test a message type the AS never handles"""
    server = _server(registry)
    msg = ProtocolMessage(
        tag=MessageTag.HGA_SHARE,
        direction=Direction.RES,
        sender=103,
        receiver=1,
        items=(PayloadItem.sym(bytes(32), 256),)
    )
    assert await server.deliver(serialize(msg), 0) == []
    assert server.rejections[0].reason is TerminationReason.UNEXPECTED
    assert server.engine.totals().total == 0


@pytest.mark.asyncio
async def test_unknown_sender_costs_no_crypto(registry: KeyRegistry) -> None:
    """Test a Msg1 from an unregistered id is refused before decryption"""
    server = _server(registry)
    msg = ProtocolMessage(
        tag=MessageTag.HGAKA_MSG1,
        direction=Direction.REQ,
        sender=555,
        receiver=1,
        items=(PayloadItem.sym(bytes(48), 288),)
    )
    await server.deliver(serialize(msg), 0)
    rejection = server.rejections[0]
    assert rejection.reason is TerminationReason.UNKNOWN_ID
    assert rejection.ops.total == 0


@pytest.mark.asyncio
async def test_server_evicts_closed_sessions(registry: KeyRegistry) -> None:
    """Test finished sessions leave the table after one replay window but still count"""
    server = _server(registry)
    done = ServerSession(role=Role.SERVER, leader=103, clients=[101, 102, 103], target=900)
    done.advance(Step.HGAKA_S7)
    done.phase = Phase.COMPLETED
    done.closed_at = 0
    failed = ServerSession(role=Role.SERVER, leader=102, clients=[101, 102], target=900)
    failed.advance(Step.HGAKA_S2)
    failed.phase = Phase.TERMINATED
    failed.reason = TerminationReason.HM_MISMATCH
    server.sessions = {103: done, 102: failed}
    stray = ProtocolMessage(
        tag=MessageTag.HGA_SHARE,
        direction=Direction.RES,
        sender=103,
        receiver=1,
        items=(PayloadItem.sym(bytes(32), 256),)
    )

    await server.deliver(serialize(stray), server.retention)
    assert set(server.sessions) == {102, 103}
    assert server.sessions[102].closed_at == server.retention

    await server.deliver(serialize(stray), 2 * server.retention + 1)
    assert not server.sessions
    assert server.retired == {Phase.COMPLETED: 1, Phase.TERMINATED: 1}
    assert server.summary().phase is Phase.COMPLETED


@pytest.mark.asyncio
async def test_server_summary_after_failed_session_is_evicted(registry: KeyRegistry) -> None:
    """Test the termination reason survives eviction"""
    server = _server(registry)
    failed = ServerSession(role=Role.SERVER, leader=103, clients=[101, 102, 103], target=900)
    failed.advance(Step.HGAKA_S2)
    failed.phase = Phase.TERMINATED
    failed.reason = TerminationReason.TIMEOUT
    failed.closed_at = 0
    server.sessions = {103: failed}

    await server.on_timeout(server.retention + 1)
    assert not server.sessions
    summary = server.summary()
    assert summary.phase is Phase.TERMINATED
    assert summary.reason is TerminationReason.TIMEOUT

@pytest.mark.asyncio
async def test_target_ignores_other_tags(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test the target only serves HGA Msg1"""
    target = TargetDevice(900, CryptoEngine(DeterministicRandom("t")), registry.for_target(900), 5000)
    msg = ProtocolMessage(
        tag=MessageTag.HGAKA_MSG1,
        direction=Direction.REQ,
        sender=103,
        receiver=900,
        items=(PayloadItem.sym(bytes(48), 288),)
    )
    await target.deliver(serialize(msg), 0)
    assert target.rejections[0].reason is TerminationReason.UNEXPECTED
    assert target.summary().phase is Phase.IDLE


@pytest.mark.asyncio
async def test_honest_run(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test every member and the target end with one SK"""
    transcript = await run(group, registry, seed=1)

    assert transcript.group_completed()
    assert transcript.target.session_key == transcript.shared_session_key()
    assert transcript.server.phase is Phase.COMPLETED
    assert transcript.message_count(Protocol.HGAKA) == 3 + 2 * 3
    assert transcript.message_count(Protocol.HGA) == 2 * 3
    assert all(not a.rejections for a in transcript.actors.values())


@pytest.mark.asyncio
async def test_hgaka_only(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test stopping after HGAKA"""
    transcript = await run(group, registry, seed=1, continue_to_hga=False)

    assert all(m.phase is Phase.COMPLETED for m in transcript.members)
    assert transcript.message_count(Protocol.HGA) == 0
    assert transcript.target.phase is Phase.IDLE
    assert transcript.leader.session_key is not None


@pytest.mark.asyncio
async def test_leader_resends_lost_request(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test one resend after 2 * delta when Msg1 is lost"""
    script = AdversaryScript(
        name="lost-msg1",
        rules=[AdversaryRule(
            match=MessageMatch(tag=MessageTag.HGAKA_MSG1),
            action=AdversaryAction.DROP,
            limit=1
        )]
    )
    transcript = await run(group, registry, script, seed=2, delta_t_ms=5000)

    assert transcript.group_completed()
    msg1 = [e for e in transcript.entries if e.tag is MessageTag.HGAKA_MSG1]
    assert [e.time for e in msg1] == [0, 10000]
    assert msg1[0].action is AdversaryAction.DROP
    assert transcript.leader.counters[Protocol.HGAKA].se == 5


@pytest.mark.asyncio
async def test_late_request_is_stale(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test a Msg1 delayed past delta is refused and the resend succeeds"""
    script = AdversaryScript(
        name="slow-msg1",
        rules=[AdversaryRule(
            match=MessageMatch(tag=MessageTag.HGAKA_MSG1),
            action=AdversaryAction.DELAY,
            delay_ms=6000,
            limit=1
        )]
    )
    transcript = await run(group, registry, script, seed=3, delta_t_ms=5000)

    assert TerminationReason.STALE in transcript.server.reasons()
    assert transcript.group_completed()


@pytest.mark.asyncio
async def test_missing_token_ends_hga(registry: KeyRegistry, group: GroupConfig) -> None:
    """Test the leader gives up when a client's token never arrives"""
    script = AdversaryScript(
        name="lost-token",
        rules=[AdversaryRule(
            match=MessageMatch(tag=MessageTag.PRE_HGA, sender=101),
            action=AdversaryAction.DROP
        )]
    )
    transcript = await run(group, registry, script, seed=4)

    assert transcript.leader.phase is Phase.TERMINATED
    assert transcript.leader.reason is TerminationReason.INCOMPLETE_GROUP
    assert all(c.phase is Phase.TERMINATED for c in transcript.clients)
    assert transcript.target.phase is Phase.IDLE
    assert transcript.message_count(Protocol.HGA) == 2
