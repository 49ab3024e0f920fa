"""Sender machinery: burst sizing, deferral, CWR rounds, recovery wiring."""

import pytest

from ecnsim.cca import BurstPolicy, parse_variant
from ecnsim.engine import NS_PER_MS, NS_PER_SEC, RandomSource, Simulator
from ecnsim.prr import PrrMode
from ecnsim.queue import AqmConfig, BottleneckQueue, DelayMetric, StepShape
from ecnsim.sender import FlowSender, burst_size

MS = NS_PER_MS


class TestBurstSize:
    def test_linux_default_sizing(self):
        # 1 ms of a 667-segment window spread over a 50 ms round
        assert burst_size(667, 50 * MS, BurstPolicy(max_burst_ns=1 * MS)) == 13

    def test_prague_default_sizing(self):
        assert burst_size(667, 50 * MS, BurstPolicy(max_burst_ns=250_000)) == 3

    def test_small_window_keeps_bursts_floor_one(self):
        assert burst_size(10, 100 * MS, BurstPolicy(max_burst_ns=1 * MS)) == 1

    def test_cap(self):
        assert burst_size(10_000, 10 * MS, BurstPolicy(max_burst_ns=1 * MS)) == 44

    def test_monotone_in_cwnd_and_antitone_in_srtt(self):
        policy = BurstPolicy(max_burst_ns=1 * MS)
        sizes_w = [burst_size(w, 50 * MS, policy) for w in range(2, 2000, 7)]
        assert all(b >= a for a, b in zip(sizes_w, sizes_w[1:]))
        sizes_r = [burst_size(600, r, policy) for r in range(5 * MS, 200 * MS, MS)]
        assert all(b <= a for a, b in zip(sizes_r, sizes_r[1:]))

    def test_ratio_tracks_window_ratio(self):
        policy = BurstPolicy(max_burst_ns=1 * MS)
        srtt = 40 * MS
        big = burst_size(600, srtt, policy)
        small = burst_size(150, srtt, policy)
        assert abs(big / small - 4.0) <= big * 0.35  # within rounding of 4x

    def test_requires_positive_srtt(self):
        with pytest.raises(ValueError):
            burst_size(100, 0, BurstPolicy())


def make_sender(code="DCTCP-PS10Tu", prr=None, tso=None, cwnd0=10, rtt_ns=20 * MS):
    sim = Simulator()
    parsed = parse_variant(code)
    rng = RandomSource(1)
    queue = BottleneckQueue(
        sim, 100_000_000, AqmConfig(DelayMetric.SOJOURN, StepShape(2 * MS)), rng
    )
    sender = FlowSender(
        sim,
        0,
        parsed.cca,
        prr if prr is not None else parsed.prr_mode,
        tso if tso is not None else parsed.tso,
        queue,
        srtt_init_ns=rtt_ns,
        nic_rate_bps=1_000_000_000,
        initial_cwnd=cwnd0,
    )
    return sim, sender, queue


def fake_ack(sender, seq, ce=False, rtt_ns=20 * MS):
    from ecnsim.queue import PacketRecord

    pkt = PacketRecord(0, seq, 1500, sender.sim.now - rtt_ns if sender.sim.now else 0)
    pkt.ce = ce
    sender.on_ack(pkt)


class TestTransmission:
    def test_initial_window_emitted(self):
        sim, sender, queue = make_sender(cwnd0=10)
        sender.start()
        assert sender.stats.sent == 10
        assert sender.inflight == 10

    def test_tso_defers_below_burst(self):
        sim, sender, _ = make_sender(cwnd0=100, rtt_ns=10 * MS)
        sender.start()
        sent = sender.stats.sent
        # burst is 1ms*100/10ms = 10; manually open 5 segments of headroom
        sender.inflight -= 5
        sender.try_transmit(sim.now)
        assert sender.stats.sent == sent  # deferred, nothing emitted
        assert sender.stats.deferrals >= 1

    def test_tso_flushes_whole_bursts_only(self):
        sim, sender, _ = make_sender(cwnd0=100, rtt_ns=10 * MS)
        sender.start()
        sent = sender.stats.sent
        sender.inflight -= 14  # burst 10: one whole burst goes, 4 deferred
        sender.try_transmit(sim.now)
        assert sender.stats.sent == sent + 10

    def test_no_tso_sends_every_permitted_segment(self):
        sim, sender, _ = make_sender(tso=False, cwnd0=100, rtt_ns=10 * MS)
        sender.start()
        sent = sender.stats.sent
        sender.inflight -= 5
        sender.try_transmit(sim.now)
        assert sender.stats.sent == sent + 5


class TestWindowGrowth:
    def test_slow_start_doubles_per_round(self):
        sim, sender, _ = make_sender(cwnd0=10)
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        for seq in range(10):
            fake_ack(sender, seq)
        assert sender.cwnd == 20

    def test_additive_increase_one_per_window(self):
        sim, sender, _ = make_sender(cwnd0=100)
        sender.ssthresh = 50  # force congestion avoidance
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        for seq in range(100):
            fake_ack(sender, seq)
        assert sender.cwnd == 101
        assert sender.snd_cwnd_cnt == 0

    def test_first_ce_enters_cwr_and_reduces_once(self):
        sim, sender, _ = make_sender(cwnd0=100)
        sender.ssthresh = 50
        sender.alpha = sender.alpha.__class__(1024, sender.alpha.cfg)  # alpha = 1
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        fake_ack(sender, 0, ce=True)
        assert sender.in_cwr
        assert sender.ssthresh == 50  # halved from 100 at alpha 1
        cwnd_after = sender.cwnd
        fake_ack(sender, 1, ce=True)  # second CE same round: no new reduction
        assert sender.ssthresh == 50
        assert sender.stats.reductions == 1

    def test_zero_alpha_reaction_still_enters_cwr(self):
        # reduction of zero: window unchanged but increase is suppressed
        sim, sender, _ = make_sender(cwnd0=100)
        sender.ssthresh = 50
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        fake_ack(sender, 0, ce=True)
        assert sender.in_cwr
        assert sender.ssthresh == 100
        cwnd_now = sender.cwnd
        for seq in range(1, 60):
            fake_ack(sender, seq)
        assert sender.cwnd == cwnd_now  # no additive increase inside CWR

    def test_cwr_exit_on_covering_ack_restores_growth(self):
        sim, sender, _ = make_sender(cwnd0=20)
        sender.ssthresh = 10
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        fake_ack(sender, 0, ce=True)
        exit_seq = sender.cwr_exit_seq
        for seq in range(1, exit_seq + 1):
            fake_ack(sender, seq)
        assert not sender.in_cwr
        assert len(sender.stats.episodes) == 1

    def test_prague_grows_during_cwr_except_on_ce(self):
        sim, sender, _ = make_sender("prague-250us", cwnd0=40)
        sender.ssthresh = 10
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        fake_ack(sender, 0, ce=True)
        assert sender.in_cwr
        cnt0 = sender.snd_cwnd_cnt
        fake_ack(sender, 1)  # clean ack inside CWR accrues increase credit
        assert sender.snd_cwnd_cnt == cnt0 + 1
        fake_ack(sender, 2, ce=True)  # CE ack does not
        assert sender.snd_cwnd_cnt == cnt0 + 1

    def test_dctcp_resets_increase_counter_on_cwr_prague_carries_it(self):
        for code, expect in (("DCTCP-PS10Tu", 0), ("prague-250us", 7)):
            sim, sender, _ = make_sender(code, cwnd0=40)
            sender.ssthresh = 10
            sender.start()
            sim.run_until(1 * NS_PER_SEC)
            sender.snd_cwnd_cnt = 7
            fake_ack(sender, 0, ce=True)
            want = expect + (1 if code.startswith("prague") else 0)
            assert sender.snd_cwnd_cnt in (expect, want)


class TestRecoveryIntegration:
    def test_pipe_below_cwnd_at_entry_under_tso(self):
        # deferral leaves in-flight data short of the window when CWR starts
        sim, sender, queue = make_sender(cwnd0=200, rtt_ns=10 * MS)
        sender.ssthresh = 100
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        burst = burst_size(sender.cwnd, sender.srtt, sender.burst_policy)
        for seq in range(burst - 1):  # open less than one burst of headroom
            fake_ack(sender, seq, rtt_ns=10 * MS)
        assert sender.cwnd - sender.inflight >= burst - 1  # allowance deferred
        fake_ack(sender, burst - 1, ce=True, rtt_ns=10 * MS)
        ep_gap = sender.cwnd - sender.inflight
        assert ep_gap >= 0
        assert sender.inflight >= sender.cwnd - burst - 2

    def test_off_mode_walks_down_one_per_ack(self):
        sim, sender, _ = make_sender("DCTCP-pS10Tu", cwnd0=100)  # PRR off
        sender.ssthresh = 50
        sender.alpha = sender.alpha.__class__(512, sender.alpha.cfg)  # alpha = 0.5
        sender.start()
        sim.run_until(1 * NS_PER_SEC)
        fake_ack(sender, 0, ce=True)
        target = sender.ssthresh
        assert target == 75  # 100 - 100*0.5/2
        start_cwnd = sender.cwnd
        fake_ack(sender, 1)
        assert sender.cwnd == start_cwnd - 1  # at most one segment per ack
