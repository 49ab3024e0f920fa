"""Per-flow sending machinery: ack clocking, SRTT, TSO bursts, CWR rounds.

Transmission is ack-clocked. Outside recovery the send budget is the window
headroom (cwnd - inflight); during recovery it is the per-ack PRR grant.
With TSO enabled the sender defers whenever the budget is below the current
burst size and then emits whole bursts back-to-back at the NIC rate, which
is what leaves in-flight data below cwnd at the moment a reduction starts.

Burst size follows the Linux sizing rule: the configured max burst duration
times the packet rate, i.e. ``max_burst * cwnd / srtt`` segments, clipped to
[1, cap]. A large window therefore earns proportionally larger bursts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alpha import AlphaState, RoundAccumulator, alpha_fraction, apply_reduction, end_of_round_update
from .cca import (
    BurstPolicy,
    CubicEcnVariant,
    CubicEpoch,
    DctcpVariant,
    cubic_epoch,
    cubic_reaction_ssthresh,
    cubic_target,
)
from .engine import NS_PER_SEC, EventKind, Simulator
from .prr import PrrMode, PrrState, enter_recovery, on_ack_sndcnt, record_sent
from .queue import BottleneckQueue, PacketRecord

INITIAL_WINDOW = 10
SSTHRESH_INF = 1 << 31


def burst_size(cwnd: int, srtt_ns: int, policy: BurstPolicy) -> int:
    """Segments per TSO burst: floor(max_burst * cwnd / srtt), in [1, cap]."""
    if srtt_ns <= 0:
        raise ValueError("srtt must be positive")
    size = policy.max_burst_ns * cwnd // srtt_ns
    if size < 1:
        return 1
    return size if size < policy.cap_segments else policy.cap_segments


@dataclass
class CwrEpisode:
    t_enter: int
    ssthresh: int
    min_cwnd: int
    t_exit: int = -1


@dataclass
class FlowStats:
    sent: int = 0
    delivered: int = 0
    delivered_ce: int = 0
    deferrals: int = 0
    reductions: int = 0
    episodes: list = field(default_factory=list)


class FlowSender:
    """One flow's sender-side state machine; single-threaded per scenario."""

    def __init__(
        self,
        sim: Simulator,
        flow_id: int,
        variant,
        prr_mode: PrrMode,
        tso_enabled: bool,
        queue: BottleneckQueue,
        srtt_init_ns: int,
        nic_rate_bps: int,
        seg_size: int = 1500,
        alpha_init_fraction: float = 0.0,
        initial_cwnd: int = INITIAL_WINDOW,
        emit_jitter_ns: int = 0,
        rng=None,
        ack_hook=None,
        round_hook=None,
    ):
        self.sim = sim
        self.flow_id = flow_id
        self.variant = variant
        self.prr_mode = prr_mode
        self.tso_enabled = tso_enabled
        self.queue = queue
        self.seg_size = seg_size
        self.nic_gap_ns = seg_size * 8 * NS_PER_SEC // nic_rate_bps
        self.ack_hook = ack_hook
        self.round_hook = round_hook

        # host/NIC emission timing noise; breaks artificial phase locks
        self.emit_jitter_ns = emit_jitter_ns
        self.rng = rng
        self.cwnd = initial_cwnd
        self.ssthresh = SSTHRESH_INF
        self.inflight = 0
        self.snd_nxt = 0
        self.snd_una = 0
        self.srtt = srtt_init_ns  # seeded from the handshake sample
        self.snd_cwnd_cnt = 0
        self.in_cwr = False
        self.cwr_exit_seq = -1
        self.prr: PrrState | None = None
        self._quota = 0
        self._nic_free = 0
        self._episode: CwrEpisode | None = None
        self.stats = FlowStats()

        if isinstance(variant, DctcpVariant):
            self.alpha = AlphaState.initial(variant.alpha_cfg, alpha_init_fraction)
            self.burst_policy = variant.burst
            self._cubic: CubicEpoch | None = None
            self._is_dctcp = True
        else:
            self.alpha = None
            self.burst_policy = BurstPolicy()
            self._cubic = None
            self._is_dctcp = False
        self.round_acc = RoundAccumulator()
        self._pending_w_max = 0

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self.try_transmit(self.sim.now)
        self.round_acc.next_seq = self.snd_nxt

    # -- ack path ----------------------------------------------------------

    def on_ack(self, pkt: PacketRecord) -> None:
        now = self.sim.now
        ce = pkt.ce
        sample = now - pkt.sent_time
        self.srtt = (7 * self.srtt + sample) >> 3
        self.inflight -= 1
        self.snd_una = pkt.seq + 1
        stats = self.stats
        stats.delivered += 1
        acc = self.round_acc
        acc.delivered += 1
        if ce:
            acc.delivered_ce += 1
            stats.delivered_ce += 1

        # leave CWR first so a CE on the boundary ack can open a new reaction
        if self.in_cwr and self.snd_una > self.cwr_exit_seq:
            self._exit_cwr(now)

        # congestion-average round boundary (sequence-clocked)
        if self._is_dctcp and self.snd_una >= acc.next_seq:
            self.alpha = end_of_round_update(self.alpha, acc)
            if self.round_hook is not None:
                self.round_hook(
                    now,
                    self.flow_id,
                    self.alpha.raw,
                    alpha_fraction(self.alpha),
                    acc.delivered,
                    acc.delivered_ce,
                )
            acc.reset(self.snd_nxt)

        if ce and not self.in_cwr:
            self._enter_cwr(now)

        self._grow(ce, now)

        if self.in_cwr:
            prr = self.prr
            if prr is not None:
                prr.prr_delivered += 1
                sndcnt = on_ack_sndcnt(prr, 1, self.inflight)
                self._quota = sndcnt
                mode = prr.mode
                if mode is PrrMode.PATCHED or mode is PrrMode.LINUX_BUGGED:
                    new_cwnd = self.inflight + sndcnt
                    self.cwnd = new_cwnd if new_cwnd > 2 else 2
            elif self.cwnd > self.ssthresh:
                # no PRR: walk down to the reduction target, <= 1 segment/ack
                self.cwnd -= 1
            ep = self._episode
            if ep is not None and self.cwnd < ep.min_cwnd:
                ep.min_cwnd = self.cwnd

        if self.ack_hook is not None:
            self.ack_hook(self)
        self.try_transmit(now)

    # -- reactions ---------------------------------------------------------

    def _enter_cwr(self, now: int) -> None:
        variant = self.variant
        if self._is_dctcp:
            target = apply_reduction(self.cwnd, self.alpha)
        else:
            target = cubic_reaction_ssthresh(self.cwnd, variant.beta_1024)
            self._pending_w_max = self.cwnd
        self.ssthresh = target
        self.in_cwr = True
        self.cwr_exit_seq = self.snd_nxt - 1
        if not (self._is_dctcp and variant.carry_cwnd_cnt):
            self.snd_cwnd_cnt = 0
        if self.prr_mode is not PrrMode.OFF:
            self.prr = enter_recovery(self.prr_mode, self.cwnd, self.inflight, target)
            self._quota = 0
        else:
            self.prr = None
        self.stats.reductions += 1
        self._episode = CwrEpisode(t_enter=now, ssthresh=target, min_cwnd=self.cwnd)

    def _exit_cwr(self, now: int) -> None:
        self.in_cwr = False
        if self.prr is not None:
            # recovery complete: resume congestion avoidance from the target
            self.cwnd = max(2, self.ssthresh)
            self.prr = None
            self._quota = 0
        if not self._is_dctcp:
            self._cubic = cubic_epoch(self._pending_w_max, self.variant.beta_1024, now)
        ep = self._episode
        if ep is not None:
            ep.t_exit = now
            self.stats.episodes.append(ep)
            self._episode = None

    # -- window growth -----------------------------------------------------

    def _grow(self, ce: bool, now: int) -> None:
        if self.in_cwr:
            if self._is_dctcp and self.variant.ai_during_cwr and not ce:
                self._ai_step()
            return
        if self.cwnd < self.ssthresh:
            self.cwnd += 1  # minimal exponential phase up to the first mark
            return
        if self._is_dctcp:
            if self.variant.ai_during_cwr and ce:
                return  # increase suppressed on acks carrying feedback
            self._ai_step()
        else:
            self._cubic_grow(now)

    def _ai_step(self) -> None:
        self.snd_cwnd_cnt += 1
        if self.snd_cwnd_cnt >= self.cwnd:
            self.cwnd += 1
            self.snd_cwnd_cnt = 0

    def _cubic_grow(self, now: int) -> None:
        epoch = self._cubic
        if epoch is None:
            epoch = self._cubic = cubic_epoch(self.cwnd, self.variant.beta_1024, now)
        target = cubic_target(epoch, now)
        if target > self.cwnd:
            cnt = max(2, self.cwnd // (target - self.cwnd))
        else:
            cnt = 100 * self.cwnd
        epoch.cnt_acc += 1
        if epoch.cnt_acc >= cnt:
            self.cwnd += 1
            epoch.cnt_acc = 0

    # -- transmission ------------------------------------------------------

    def try_transmit(self, now: int) -> None:
        if self.in_cwr and self.prr is not None:
            budget = self._quota
        else:
            budget = self.cwnd - self.inflight
        if budget <= 0:
            return
        if self.tso_enabled:
            burst = burst_size(self.cwnd, self.srtt, self.burst_policy)
            if budget < burst:
                self.stats.deferrals += 1
                return
            n = burst * (budget // burst)
        else:
            n = budget
        self._emit(n, now)

    def _emit(self, n: int, now: int) -> None:
        gap = self.nic_gap_ns
        # host scheduling noise shifts the send, but never compounds across
        # sends: the NIC clock only floors the start time
        t = now
        if self.emit_jitter_ns and self.rng is not None:
            t += int(self.rng.uniform01() * self.emit_jitter_ns)
        start = self._nic_free if self._nic_free > t else t
        sim = self.sim
        arrive = self.queue.arrive
        seq = self.snd_nxt
        flow_id = self.flow_id
        size = self.seg_size
        for i in range(1, n + 1):
            t = start + i * gap
            sim.schedule(t, EventKind.PACKET_ARRIVAL, arrive, PacketRecord(flow_id, seq, size, t))
            seq += 1
        self.snd_nxt = seq
        self._nic_free = start + n * gap
        self.inflight += n
        self.stats.sent += n
        if self.prr is not None:
            record_sent(self.prr, n)
            self._quota -= n
