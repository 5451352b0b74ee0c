"""Simulation clock: manual (tests, scenarios) or wall-clock-backed."""

from __future__ import annotations

import threading
import time


class SimClock:
    """Millisecond clock.

    Manual mode starts at 0 and moves only via advance(); realtime mode
    tracks the monotonic wall clock from construction. Event logs carry
    sim time only, so manual runs are bit-reproducible.
    """

    def __init__(self, realtime: bool = False):
        self.realtime = realtime
        self._t0 = time.monotonic()
        self._now_ms = 0
        self._lock = threading.Lock()

    def now_ms(self) -> int:
        if self.realtime:
            return int((time.monotonic() - self._t0) * 1000)
        return self._now_ms

    def advance(self, delta_ms: int) -> int:
        if self.realtime:
            raise RuntimeError("cannot advance a realtime clock")
        if delta_ms < 0:
            raise ValueError("delta_ms must be non-negative")
        with self._lock:
            self._now_ms += delta_ms
            return self._now_ms

    def advance_to(self, t_ms: int) -> int:
        if self.realtime:
            raise RuntimeError("cannot advance a realtime clock")
        with self._lock:
            if t_ms < self._now_ms:
                raise ValueError(f"time would move backward: {t_ms} < {self._now_ms}")
            self._now_ms = t_ms
            return self._now_ms

    def sleep(self, delta_ms: int) -> None:
        """Realtime: block. Manual: no-op (tests drive time explicitly)."""
        if self.realtime and delta_ms > 0:
            time.sleep(delta_ms / 1000.0)
