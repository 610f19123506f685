"""
Reconciliation of a run transcript against the closed-form costs
"""

from typing import Dict, List

from pydantic import BaseModel, Field
import structlog

from src.actors.session import ActorSummary
from src.costmodel.formulas import OpCounts, comm, comp, message_count
from src.crypto import OpCounter, Protocol
from src.netsim.transcript import RunTranscript

logger = structlog.get_logger()

# Formula role -> which measured actors it covers
_ROLE_NAMES = {
    Protocol.HGAKA: ("leader", "non_leader", "server"),
    Protocol.HGA: ("leader", "non_leader", "target"),
}


class Discrepancy(BaseModel):
    """One measured quantity that differs from its formula"""

    protocol: Protocol
    item: str = Field(..., description="e.g. 'messages', 'bits:HGAKA-MSG7', 'ops:server.se'")
    expected: int
    measured: int

    def describe(self) -> str:
        return f"{self.protocol.value} {self.item}: expected {self.expected}, measured {self.measured}"


class ReconciliationReport(BaseModel):
    """Measured vs analytic costs for one run"""

    nc: int
    scenario: str = "honest"
    message_counts: Dict[Protocol, int] = Field(default_factory=dict)
    payload_bits: Dict[Protocol, int] = Field(default_factory=dict)
    ops: Dict[Protocol, OpCounts] = Field(default_factory=dict)
    discrepancies: List[Discrepancy] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def render(self) -> str:
        """Plain-text report"""
        lines = [f"reconciliation nc={self.nc} scenario={self.scenario}"]
        for protocol in Protocol:
            ops = self.ops.get(protocol, OpCounts()).nonzero()
            lines.append(
                f"  {protocol.value}: messages={self.message_counts.get(protocol, 0)} "
                f"payload_bits={self.payload_bits.get(protocol, 0)} ops={ops}"
            )
        if self.ok:
            lines.append("  zero discrepancies")
        for d in self.discrepancies:
            lines.append(f"  off-formula {d.describe()}")
        return "\n".join(lines) + "\n"


def _sum(summaries: List[ActorSummary], protocol: Protocol) -> OpCounts:
    total = OpCounter()
    for summary in summaries:
        total = total + summary.counters.get(protocol, OpCounter())
    return OpCounts.from_counter(total)


def _measured_roles(transcript: RunTranscript, protocol: Protocol) -> Dict[str, OpCounts]:
    peer = transcript.server if protocol is Protocol.HGAKA else transcript.target
    leader, non_leader, third = _ROLE_NAMES[protocol]
    return {
        leader: _sum([transcript.leader], protocol),
        non_leader: _sum(transcript.clients, protocol),
        third: _sum([peer], protocol),
    }


def _compare_counts(
    protocol: Protocol,
    prefix: str,
    expected: OpCounts,
    measured: OpCounts
) -> List[Discrepancy]:
    return [
        Discrepancy(protocol=protocol, item=f"{prefix}.{kind}", expected=want, measured=getattr(measured, kind))
        for kind, want in expected.as_dict().items()
        if getattr(measured, kind) != want
    ]


def reconcile(transcript: RunTranscript, nc: int) -> ReconciliationReport:
    """
    Compare message counts, payload bits and operation counts with the formulas

    Args:
        transcript: Transcript of a run at group size nc
        nc: Group size

    Returns:
        Report listing every per-message and per-role discrepancy
    """
    report = ReconciliationReport(nc=nc, scenario=transcript.scenario)

    for protocol in Protocol:
        expected_comm = comm(protocol, nc)
        expected_comp = comp(protocol, nc)

        count = transcript.message_count(protocol)
        bits = transcript.payload_bits(protocol)
        measured_total = _sum(list(transcript.actors.values()), protocol)
        report.message_counts[protocol] = count
        report.payload_bits[protocol] = bits
        report.ops[protocol] = measured_total

        wanted_count = message_count(protocol, nc)
        if count != wanted_count:
            report.discrepancies.append(
                Discrepancy(protocol=protocol, item="messages", expected=wanted_count, measured=count)
            )
        if bits != expected_comm.bits:
            report.discrepancies.append(
                Discrepancy(protocol=protocol, item="bits", expected=expected_comm.bits, measured=bits)
            )
        by_tag = transcript.payload_bits_by_tag(protocol)
        for label in sorted(set(expected_comm.breakdown) | set(by_tag)):
            want, got = expected_comm.breakdown.get(label, 0), by_tag.get(label, 0)
            if want != got:
                report.discrepancies.append(
                    Discrepancy(protocol=protocol, item=f"bits:{label}", expected=want, measured=got)
                )

        report.discrepancies.extend(_compare_counts(protocol, "ops", expected_comp.counts, measured_total))
        measured_roles = _measured_roles(transcript, protocol)
        for role, expected_role in expected_comp.roles.items():
            report.discrepancies.extend(
                _compare_counts(protocol, f"ops:{role}", expected_role, measured_roles[role])
            )

    logger.info(
        "Run reconciled",
        nc=nc,
        scenario=transcript.scenario,
        discrepancies=len(report.discrepancies)
    )
    return report
