"""
Protocol actors: authentication server, group leader, clients and target
"""

from src.actors.auth_server import AuthenticationServer
from src.actors.base_actor import BaseActor
from src.actors.client import GroupClient
from src.actors.leader import GroupLeader
from src.actors.registry import GroupConfig, KeyRegistry
from src.actors.replay_cache import DisabledReplayCache, ReplayCache
from src.actors.session import ActorSummary, Phase, Rejection, Role, SessionState, Step
from src.actors.target import TargetDevice

__all__ = [
    "ActorSummary",
    "AuthenticationServer",
    "BaseActor",
    "DisabledReplayCache",
    "GroupClient",
    "GroupConfig",
    "GroupLeader",
    "KeyRegistry",
    "Phase",
    "Rejection",
    "ReplayCache",
    "Role",
    "SessionState",
    "Step",
    "TargetDevice",
]
