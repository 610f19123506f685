"""
Exception hierarchy shared by all M2O modules
"""

from enum import Enum


class TerminationReason(str, Enum):
    """Why a message was rejected or a session was terminated"""
    STALE = "stale"
    UNKNOWN_ID = "unknown-id"
    ID_MISMATCH = "id-mismatch"
    DECRYPT_FAILURE = "decrypt-failure"
    EN_MISMATCH = "en-mismatch"
    HM_MISMATCH = "hm-mismatch"
    DUPLICATE = "duplicate"
    UNAUTHORIZED = "unauthorized"
    HASH_MISMATCH = "hash-mismatch"
    GROUP_VERIFY_FAILED = "group-verify-failed"
    INCOMPLETE_GROUP = "incomplete-group"
    TIMEOUT = "timeout"
    MALFORMED = "malformed"
    UNEXPECTED = "unexpected"


class M2OError(Exception):
    """Base class for every error raised by this package"""


class PaddingError(M2OError):
    """Symmetric ciphertext padding is malformed (tampering or wrong key)"""


class RangeError(M2OError):
    """Integer operand outside [0, n) for a raw RSA operation"""


class MalformedMessage(M2OError):
    """Wire buffer cannot be parsed into a protocol message"""


class UnknownClient(M2OError):
    """A key lookup failed for an entity identifier"""


class DecryptFailure(M2OError):
    """An RSA-encrypted token does not decode to the expected structure"""


class DomainError(M2OError):
    """A cost-model input is outside the formula's domain"""


class MissingUnitCost(M2OError):
    """A timing model lacks the unit cost for a non-zero operation count"""


class Deadlock(M2OError):
    """No events remain but some actor is still waiting"""


class ConfigError(M2OError):
    """Invalid run configuration"""


class CalibrationError(M2OError):
    """The clock cannot resolve a primitive's running time"""


class Rejected(M2OError):
    """
    The message is discarded; the session it claimed to belong to is untouched
    """

    def __init__(self, reason: TerminationReason, detail: str = "") -> None:
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason
        self.detail = detail


class Terminated(Rejected):
    """The session ends; the actor emits nothing further in this execution"""
