"""
Logical clock and per-hop latency model
"""

from typing import Dict, Optional, Tuple

from src.config import settings


class LogicalClock:
    """Monotone millisecond clock advanced only by the scheduler"""

    def __init__(
        self,
        default_latency_ms: Optional[int] = None,
        latencies: Optional[Dict[Tuple[int, int], int]] = None,
        start: int = 0
    ) -> None:
        """
        Initialize clock

        Args:
            default_latency_ms: Hop latency when no per-link value is set
            latencies: (sender, receiver) -> latency overrides
            start: Initial time
        """
        self.default_latency = (
            default_latency_ms if default_latency_ms is not None else settings.HOP_LATENCY_MS
        )
        self.latencies = dict(latencies or {})
        self._now = start

    @property
    def now(self) -> int:
        return self._now

    def advance_to(self, time: int) -> None:
        if time < self._now:
            raise ValueError(f"clock cannot move back from {self._now} to {time}")
        self._now = time

    def latency(self, sender: int, receiver: int) -> int:
        return self.latencies.get((sender, receiver), self.default_latency)
