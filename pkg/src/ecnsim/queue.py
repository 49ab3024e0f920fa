"""Single-bottleneck FIFO queue with ECN marking on dequeue.

The queue drains at a fixed configured rate. When a packet reaches the head
and starts service, a queueing-delay metric is computed and the packet is
CE-marked with the probability given by the configured marking shape:

* SOJOURN - the time the packet itself waited (dequeue start minus enqueue).
* EST     - expected service time of the backlog *behind* the departing
            packet, i.e. the delay this packet's presence inflicted on
            traffic queued after it.

STEP marks with probability 1 strictly above the threshold; RAMP marks with
probability rising linearly between its two delay bounds (a per-packet
Bernoulli draw from the scenario's seeded source).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .engine import NS_PER_SEC, EventKind, RandomSource, Simulator


class DelayMetric(Enum):
    SOJOURN = "sojourn"
    EST = "est"


@dataclass(frozen=True)
class StepShape:
    threshold_ns: int

    def __post_init__(self):
        if self.threshold_ns <= 0:
            raise ValueError("step threshold must be positive")


@dataclass(frozen=True)
class RampShape:
    min_ns: int
    max_ns: int

    def __post_init__(self):
        if self.min_ns <= 0 or self.max_ns <= 0:
            raise ValueError("ramp bounds must be positive")
        if self.min_ns >= self.max_ns:
            raise ValueError("ramp requires min < max")


@dataclass(frozen=True)
class AqmConfig:
    metric: DelayMetric
    shape: StepShape | RampShape
    drop_cap_pkts: int = 10_000


class PacketRecord:
    """One segment in flight, reused from emission through dequeue to its ack."""

    __slots__ = ("flow_id", "seq", "size_bytes", "sent_time", "enqueue_time", "ce")

    def __init__(self, flow_id: int, seq: int, size_bytes: int, sent_time: int):
        self.flow_id = flow_id
        self.seq = seq
        self.size_bytes = size_bytes
        self.sent_time = sent_time
        self.enqueue_time = -1
        self.ce = False

    def __repr__(self):
        return (
            f"PacketRecord(flow={self.flow_id}, seq={self.seq}, "
            f"size={self.size_bytes}, ce={self.ce})"
        )


def marking_probability(delay_ns: int, shape) -> float:
    """Mark probability for a measured queueing delay.

    Step comparison is strict: a delay exactly at the threshold does not mark.
    """
    if isinstance(shape, StepShape):
        return 1.0 if delay_ns > shape.threshold_ns else 0.0
    span = shape.max_ns - shape.min_ns
    p = (delay_ns - shape.min_ns) / span
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return p


def delay_metric(
    metric: DelayMetric,
    head: PacketRecord,
    now: int,
    backlog_behind_bytes: int,
    drain_rate_bps: int,
) -> int:
    """Queueing-delay measurement (ns) for the packet being dequeued.

    `backlog_behind_bytes` must already exclude the departing packet itself.
    """
    if metric is DelayMetric.SOJOURN:
        return now - head.enqueue_time
    return backlog_behind_bytes * 8 * NS_PER_SEC // drain_rate_bps


@dataclass
class QueueStats:
    drops: int = 0
    enqueued: int = 0
    departed: int = 0
    marks_by_flow: dict = field(default_factory=dict)
    departed_by_flow: dict = field(default_factory=dict)
    drops_by_flow: dict = field(default_factory=dict)


class BottleneckQueue:
    """Work-conserving FIFO drained at `drain_rate_bps`, marking at dequeue.

    `on_departure(pkt, now)` is invoked when a packet finishes serialization
    on the link; the scenario harness uses it to deliver the ack. The optional
    `dequeue_hook(now, flow_id, sojourn_ns, est_ns, marked)` fires at each
    service start and feeds the per-dequeue trace.
    """

    def __init__(
        self,
        sim: Simulator,
        drain_rate_bps: int,
        aqm: AqmConfig,
        rng: RandomSource,
        on_departure=None,
        dequeue_hook=None,
    ):
        self.sim = sim
        self.drain_rate_bps = drain_rate_bps
        self.aqm = aqm
        self.rng = rng
        self.on_departure = on_departure
        self.dequeue_hook = dequeue_hook
        self.fifo: deque[PacketRecord] = deque()
        self.backlog_bytes = 0
        self.busy = False
        self.stats = QueueStats()
        # per-dequeue delay accumulators, reset by the sampling harness
        self.window_delay_sum_ns = 0
        self.window_delay_count = 0
        self.recording = False
        self.recorded_sojourns: list[int] = []

    def __len__(self) -> int:
        return len(self.fifo)

    def arrive(self, pkt: PacketRecord) -> None:
        self.enqueue(pkt, self.sim.now)

    def enqueue(self, pkt: PacketRecord, now: int) -> bool:
        """Append `pkt` unless the packet cap is reached (drop, counted)."""
        if len(self.fifo) >= self.aqm.drop_cap_pkts:
            self.stats.drops += 1
            by_flow = self.stats.drops_by_flow
            by_flow[pkt.flow_id] = by_flow.get(pkt.flow_id, 0) + 1
            return False
        pkt.enqueue_time = now
        self.fifo.append(pkt)
        self.backlog_bytes += pkt.size_bytes
        self.stats.enqueued += 1
        if not self.busy:
            self._start_service(now)
        return True

    def _start_service(self, now: int) -> None:
        # dequeue moment: the head leaves the FIFO and begins serialization
        pkt = self.fifo.popleft()
        self.backlog_bytes -= pkt.size_bytes
        sojourn = now - pkt.enqueue_time
        est = self.backlog_bytes * 8 * NS_PER_SEC // self.drain_rate_bps
        delay = sojourn if self.aqm.metric is DelayMetric.SOJOURN else est
        p = marking_probability(delay, self.aqm.shape)
        if p >= 1.0:
            marked = True
        elif p <= 0.0:
            marked = False
        else:
            marked = self.rng.uniform01() < p
        if marked:
            pkt.ce = True
            flow_marks = self.stats.marks_by_flow
            flow_marks[pkt.flow_id] = flow_marks.get(pkt.flow_id, 0) + 1
        self.window_delay_sum_ns += sojourn
        self.window_delay_count += 1
        if self.recording:
            self.recorded_sojourns.append(sojourn)
        if self.dequeue_hook is not None:
            self.dequeue_hook(now, pkt.flow_id, sojourn, est, marked)
        self.busy = True
        done = now + pkt.size_bytes * 8 * NS_PER_SEC // self.drain_rate_bps
        self.sim.schedule(done, EventKind.PACKET_DEPARTURE, self._depart, pkt)

    def _depart(self, pkt: PacketRecord) -> None:
        now = self.sim.now
        self.stats.departed += 1
        by_flow = self.stats.departed_by_flow
        by_flow[pkt.flow_id] = by_flow.get(pkt.flow_id, 0) + 1
        self.busy = False
        if self.fifo:
            self._start_service(now)
        if self.on_departure is not None:
            self.on_departure(pkt, now)

    def take_window_delay(self) -> tuple[int, int]:
        """Return and reset the (sum_ns, count) sojourn accumulator."""
        out = (self.window_delay_sum_ns, self.window_delay_count)
        self.window_delay_sum_ns = 0
        self.window_delay_count = 0
        return out
