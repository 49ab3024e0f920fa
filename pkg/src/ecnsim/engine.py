"""Deterministic discrete-event core: virtual clock, ordered event queue, seeded draws.

Time is integer nanoseconds throughout. Events that share a fire time run in
the order they were scheduled (FIFO among ties), which makes races such as
dequeue-before-enqueue deterministic.
"""

from __future__ import annotations

import heapq
import random
from enum import IntEnum

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_SEC = 1_000_000_000


class SchedulingError(Exception):
    """An event was scheduled before the current clock."""


class EventKind(IntEnum):
    PACKET_ARRIVAL = 0
    PACKET_DEPARTURE = 1
    ACK_ARRIVAL = 2
    TIMER = 3


class Simulator:
    """Single-threaded event loop over an integer-nanosecond virtual clock.

    One instance per scenario run; instances share no state, so independent
    runs may execute in parallel processes.
    """

    def __init__(self) -> None:
        self.now = 0
        self._heap: list = []
        self._seq = 0
        # instrumentation hook: called as on_fire(time, seq, kind) before each handler
        self.on_fire = None

    def schedule(self, fire_at: int, kind: EventKind, callback, arg=None) -> None:
        """Queue `callback(arg)` (or `callback()` when arg is None) at `fire_at` ns."""
        if fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule event at {fire_at} ns; clock is already {self.now} ns"
            )
        self._seq += 1
        heapq.heappush(self._heap, (fire_at, self._seq, kind, callback, arg))

    def run_until(self, t: int) -> None:
        """Fire every event with fire_at <= t, then set the clock to t."""
        if t < self.now:
            raise SchedulingError(f"cannot run backwards to {t} ns from {self.now} ns")
        heap = self._heap
        pop = heapq.heappop
        hook = self.on_fire
        while heap and heap[0][0] <= t:
            fire_at, seq, kind, callback, arg = pop(heap)
            self.now = fire_at
            if hook is not None:
                hook(fire_at, seq, kind)
            if arg is None:
                callback()
            else:
                callback(arg)
        self.now = t

    def pending(self) -> int:
        return len(self._heap)


class RandomSource:
    """Seeded uniform source; identical seeds give identical draw sequences.

    Backed by Python's Mersenne Twister, whose output is stable across
    platforms and versions, so replays are bit-identical anywhere.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._rng = random.Random(seed)

    def uniform01(self) -> float:
        """Next draw in [0, 1)."""
        return self._rng.random()
