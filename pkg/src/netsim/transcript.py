"""
Run Transcript - ordered record of everything that crossed the channel
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from src.actors.session import ActorSummary, Phase, Role
from src.crypto import Protocol
from src.netsim.adversary import AdversaryAction
from src.wire import MessageTag, dump_transcript


class TranscriptEntry(BaseModel):
    """One message as sent, with what the adversary did to it"""

    time: int = Field(..., description="Send time")
    deliver_at: Optional[int] = Field(None, description="Arrival time; None when dropped")
    tag: MessageTag
    hop: int = 0
    sender: int
    receiver: int
    action: AdversaryAction = AdversaryAction.PASS
    honest: bool = Field(True, description="Emitted by an honest actor")
    raw: bytes = Field(..., description="Bytes as emitted")
    delivered: Optional[bytes] = Field(None, description="Bytes as delivered, when they differ")
    payload_bits: int = Field(..., description="Itemized bits booked by the cost tables")
    wire_bits: int = Field(..., description="Serialized bits, headers included")

    @property
    def protocol(self) -> Protocol:
        return self.tag.protocol


class RunTranscript(BaseModel):
    """Result of one simulated execution"""

    seed: int
    nc: int
    scenario: str = "honest"
    entries: List[TranscriptEntry] = Field(default_factory=list)
    actors: Dict[int, ActorSummary] = Field(default_factory=dict)
    ended_at: int = 0

    def honest_entries(self, protocol: Optional[Protocol] = None) -> List[TranscriptEntry]:
        return [
            e for e in self.entries
            if e.honest and (protocol is None or e.protocol is protocol)
        ]

    def message_count(self, protocol: Protocol) -> int:
        return len(self.honest_entries(protocol))

    def payload_bits(self, protocol: Protocol) -> int:
        return sum(e.payload_bits for e in self.honest_entries(protocol))

    def payload_bits_by_tag(self, protocol: Protocol) -> Dict[str, int]:
        totals: Dict[str, int] = {}
        for entry in self.honest_entries(protocol):
            totals[entry.tag.label] = totals.get(entry.tag.label, 0) + entry.payload_bits
        return totals

    def observed_bytes(self) -> List[bytes]:
        """Everything a passive eavesdropper captured"""
        captured: List[bytes] = []
        for entry in self.entries:
            captured.append(entry.raw)
            if entry.delivered is not None:
                captured.append(entry.delivered)
        return captured

    def by_role(self, role: Role) -> List[ActorSummary]:
        return [a for a in self.actors.values() if a.role is role]

    @property
    def leader(self) -> ActorSummary:
        return self.by_role(Role.LEADER)[0]

    @property
    def server(self) -> ActorSummary:
        return self.by_role(Role.SERVER)[0]

    @property
    def target(self) -> ActorSummary:
        return self.by_role(Role.TARGET)[0]

    @property
    def clients(self) -> List[ActorSummary]:
        """Non-leader members"""
        return self.by_role(Role.CLIENT)

    @property
    def members(self) -> List[ActorSummary]:
        return [*self.clients, self.leader]

    def shared_session_key(self) -> Optional[str]:
        """SK held by every member, or None when they do not all agree"""
        keys = {m.session_key for m in self.members}
        if len(keys) != 1:
            return None
        return keys.pop()

    def group_completed(self) -> bool:
        """Every member and the target completed with one shared SK"""
        return (
            all(m.phase is Phase.COMPLETED for m in self.members)
            and self.target.phase is Phase.COMPLETED
            and self.shared_session_key() is not None
        )

    def dump(self) -> str:
        """`<time> <hex>` lines, in send order"""
        return dump_transcript((e.time, e.raw) for e in self.entries)
