"""Discrete-event engine with an integer-nanosecond clock."""
from __future__ import annotations

import heapq
from typing import Any, Callable


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class Engine:
    """Single-threaded event loop.

    Events are ordered by ``(fire_at, insertion_seq)`` so simultaneous events
    fire in the order they were scheduled. Handlers are plain callables taking
    one payload argument.
    """

    def __init__(self) -> None:
        self.now = 0
        self._heap: list[tuple[int, int, Callable[[Any], None], Any]] = []
        self._seq = 0
        self._cancelled: set[int] = set()
        self.processed = 0

    def schedule(self, at: int, handler: Callable[[Any], None], payload: Any = None) -> int:
        if at < self.now:
            raise SchedulingError(
                f"event for {handler!r} scheduled at {at} ns, clock is {self.now} ns"
            )
        seq = self._seq
        self._seq = seq + 1
        heapq.heappush(self._heap, (at, seq, handler, payload))
        return seq

    def cancel(self, event_id: int) -> bool:
        if event_id in self._cancelled or event_id >= self._seq:
            return False
        for entry in self._heap:
            if entry[1] == event_id:
                self._cancelled.add(event_id)
                return True
        return False

    def pending(self) -> int:
        return len(self._heap) - len(self._cancelled)

    def run_until(self, t_end: int) -> int:
        """Process every event with ``fire_at <= t_end``; leave the clock at ``t_end``."""
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) behind clock {self.now}")
        heap = self._heap
        pop = heapq.heappop
        cancelled = self._cancelled
        count = 0
        while heap and heap[0][0] <= t_end:
            at, seq, handler, payload = pop(heap)
            if cancelled and seq in cancelled:
                cancelled.discard(seq)
                continue
            self.now = at
            handler(payload)
            count += 1
        self.now = t_end
        self.processed += count
        return count
