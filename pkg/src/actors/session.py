"""
Session state shared by all roles
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from src.crypto import Nonce, OpCounter, Protocol, SymKey
from src.errors import TerminationReason
from src.wire import MessageTag, PayloadItem


class Role(str, Enum):
    """Actor role"""
    SERVER = "server"
    LEADER = "leader"
    CLIENT = "client"
    TARGET = "target"


class Phase(str, Enum):
    """Session lifecycle"""
    IDLE = "idle"
    ACTIVE = "active"
    COMPLETED = "completed"
    TERMINATED = "terminated"


class Step(str, Enum):
    """Protocol steps in execution order"""
    HGAKA_S1 = "S1-HGAKA"
    HGAKA_S2 = "S2-HGAKA"
    HGAKA_S3 = "S3-HGAKA"
    HGAKA_S4 = "S4-HGAKA"
    HGAKA_S5 = "S5-HGAKA"
    HGAKA_S6 = "S6-HGAKA"
    HGAKA_S7 = "S7-HGAKA"
    HGAKA_S8 = "S8-HGAKA"
    HGA_S1 = "S1-HGA"
    HGA_S2 = "S2-HGA"
    HGA_S3 = "S3-HGA"
    HGA_S4 = "S4-HGA"

    @property
    def order(self) -> int:
        return list(Step).index(self)


class Rejection(BaseModel):
    """Audit record for a discarded message or a terminating event"""

    time: int
    tag: Optional[MessageTag] = None
    sender: Optional[int] = None
    reason: TerminationReason
    detail: str = ""
    terminated: bool = False
    ops: OpCounter = Field(default_factory=OpCounter, description="Operations spent on the message")


class SessionState(BaseModel):
    """Progress of one actor through one execution"""

    role: Role
    step: Optional[Step] = None
    phase: Phase = Phase.IDLE
    reason: Optional[TerminationReason] = None
    outstanding_challenges: Dict[str, Nonce] = Field(
        default_factory=dict,
        description="Issued EnNonces by label, e.g. 'en1' or 'client:7'"
    )
    session_key: Optional[SymKey] = None
    or_nonce: Optional[Nonce] = None
    target_package: Optional[PayloadItem] = Field(None, description="Stored EK_D1[...] item")
    package_digest: Optional[PayloadItem] = Field(None, description="Stored H(...) item")
    timer: Optional[int] = Field(None, description="Deadline on the logical clock")

    def advance(self, step: Step) -> None:
        """Move forward; steps never go backwards"""
        if self.step is not None and step.order < self.step.order:
            raise ValueError(f"step {step.value} after {self.step.value}")
        self.step = step
        if self.phase is Phase.IDLE:
            self.phase = Phase.ACTIVE


class ActorSummary(BaseModel):
    """Final view of one actor, as stored in a run transcript"""

    entity_id: int
    role: Role
    phase: Phase
    step: Optional[Step] = None
    reason: Optional[TerminationReason] = None
    counters: Dict[Protocol, OpCounter] = Field(default_factory=dict)
    session_key: Optional[str] = Field(None, description="Hex SK held at the end, if any")
    issued_nonces: List[str] = Field(default_factory=list, description="Hex nonces this actor drew")
    rejections: List[Rejection] = Field(default_factory=list)

    @property
    def total_ops(self) -> OpCounter:
        total = OpCounter()
        for counter in self.counters.values():
            total = total + counter
        return total

    def reasons(self) -> List[TerminationReason]:
        return [r.reason for r in self.rejections]
