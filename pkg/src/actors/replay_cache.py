"""
Replay Cache - remembers (sender, Ts, EnNonce) tuples for a bounded window
"""

from typing import Dict, Optional, Tuple

import structlog

from src.config import settings

logger = structlog.get_logger()

CacheKey = Tuple[int, int, bytes]


class ReplayCache:
    """
    Duplicate detector on the logical clock

    Entries expire `window_ms` after they were stored.
    """

    def __init__(self, window_ms: Optional[int] = None) -> None:
        """
        Initialize replay cache

        Args:
            window_ms: Retention window, defaults to REPLAY_WINDOW_FACTOR * DELTA_T_MS
        """
        self.window_ms = window_ms if window_ms is not None else settings.REPLAY_WINDOW_MS
        self._seen: Dict[CacheKey, int] = {}

    def _purge(self, now: int) -> None:
        cutoff = now - self.window_ms
        self._seen = {k: stored for k, stored in self._seen.items() if stored >= cutoff}

    def seen(self, sender: int, ts: int, nonce: bytes, now: int) -> bool:
        """True if the tuple is still remembered"""
        self._purge(now)
        return (sender, ts, nonce) in self._seen

    def remember(self, sender: int, ts: int, nonce: bytes, now: int) -> None:
        self._seen[(sender, ts, nonce)] = now

    def check_and_store(self, sender: int, ts: int, nonce: bytes, now: int) -> bool:
        """
        Returns:
            True if the tuple is new (and is now stored), False on a replay
        """
        if self.seen(sender, ts, nonce, now):
            logger.warning("Replay detected", sender=sender, ts=ts)
            return False
        self.remember(sender, ts, nonce, now)
        return True

    def __len__(self) -> int:
        return len(self._seen)


class DisabledReplayCache(ReplayCache):
    """Accepts everything; negative control for the replay scenarios"""

    def seen(self, sender: int, ts: int, nonce: bytes, now: int) -> bool:
        return False

    def remember(self, sender: int, ts: int, nonce: bytes, now: int) -> None:
        pass
