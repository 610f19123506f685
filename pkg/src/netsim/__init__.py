"""
Network simulation: logical clock, scripted adversary, event loop and threat scenarios
"""

from src.netsim.adversary import (
    Adversary,
    AdversaryAction,
    AdversaryContext,
    AdversaryRule,
    AdversaryScript,
    MessageMatch,
    ScheduledInjection,
)
from src.netsim.clock import LogicalClock
from src.netsim.network import EventKind, Network, build_network, run
from src.netsim.scenarios import (
    ScenarioResult,
    ThreatScenario,
    get_scenario,
    scenario_names,
    scenario_suite,
)
from src.netsim.transcript import RunTranscript, TranscriptEntry

__all__ = [
    "Adversary",
    "AdversaryAction",
    "AdversaryContext",
    "AdversaryRule",
    "AdversaryScript",
    "EventKind",
    "LogicalClock",
    "MessageMatch",
    "Network",
    "RunTranscript",
    "ScenarioResult",
    "ScheduledInjection",
    "ThreatScenario",
    "TranscriptEntry",
    "build_network",
    "get_scenario",
    "run",
    "scenario_names",
    "scenario_suite",
]
