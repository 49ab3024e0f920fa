"""Scenario construction, execution and measurement.

A scenario is one bottleneck plus one or more flows. Senders emit through
their NIC into the shared queue; when a packet finishes serialization at the
bottleneck it is delivered and its ack (carrying the CE mark and the original
send timestamp) returns to the sender after the base round trip.

Measurement follows the two-window scheme used throughout the study: nothing
is recorded during the warmup, then per-flow rates are sampled every
`sample_window` base round trips and summary metrics are averaged over the
measurement interval. Fairness is reported as Jain's index per window,
averaged, plus the geometric mean of the per-window rate ratio.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .alpha import alpha_fraction
from .cca import parse_variant
from .engine import NS_PER_SEC, NS_PER_US, EventKind, RandomSource, Simulator
from .prr import PrrMode
from .queue import AqmConfig, BottleneckQueue
from .sender import FlowSender

TIMESERIES_COLUMNS = (
    "time_ns",
    "flow",
    "cwnd",
    "alpha",
    "throughput_bps",
    "marks",
    "queue_delay_us",
)
SUMMARY_COLUMNS = (
    "axis_value",
    "seed",
    "jain",
    "geo_ratio",
    "utilization",
    "mean_queue_us",
    "p99_queue_us",
)


class ConfigError(ValueError):
    """Scenario misconfiguration, rejected before any event runs."""


AUTO_CWND = -1  # start at the scenario's bandwidth-delay product


@dataclass(frozen=True)
class FlowConfig:
    variant_code: str
    start_ns: int = 0
    prr_override: PrrMode | None = None
    tso_override: bool | None = None
    # starting window; AUTO_CWND or a BDP-scale value models an established flow
    initial_cwnd: int = 10


@dataclass(frozen=True)
class ScenarioConfig:
    capacity_bps: int
    base_rtt_ns: int
    aqm: AqmConfig
    flows: tuple[FlowConfig, ...]
    warmup_ns: int = 20 * NS_PER_SEC
    measure_ns: int = 40 * NS_PER_SEC
    sample_window_rtts: int = 2
    seed: int = 1
    nic_rate_multiplier: float = 10.0
    seg_size: int = 1500
    payload_size: int = 1448
    start_jitter_ns: int = 0
    emit_jitter_ns: int = 0
    alpha_init_fraction: float = 0.0
    name: str = ""

    def validate(self) -> None:
        if self.capacity_bps <= 0:
            raise ConfigError("capacity must be positive")
        if self.base_rtt_ns <= 0:
            raise ConfigError("base RTT must be positive")
        if not self.flows:
            raise ConfigError("at least one flow is required")
        starts = [f.start_ns for f in self.flows]
        if starts != sorted(starts):
            raise ConfigError("flow start times must be non-decreasing")
        if self.warmup_ns < 0 or self.measure_ns <= 0:
            raise ConfigError("warmup must be >= 0 and measure > 0")
        if self.sample_window_rtts < 1:
            raise ConfigError("sample window must be at least one RTT")
        if not 0 < self.payload_size <= self.seg_size:
            raise ConfigError("payload size must be in (0, seg_size]")
        if self.nic_rate_multiplier <= 1.0:
            raise ConfigError("NIC must be faster than the bottleneck")
        if self.sample_window_rtts * self.base_rtt_ns > self.measure_ns:
            raise ConfigError("measurement interval shorter than one sample window")
        for f in self.flows:
            parse_variant(f.variant_code)  # raises on unknown codes


@dataclass
class FlowSeries:
    flow: int
    code: str
    times: list = field(default_factory=list)
    cwnd: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    throughput_bps: list = field(default_factory=list)
    marks: list = field(default_factory=list)


@dataclass
class RunSummary:
    jain: float
    geo_ratio: float
    utilization: float
    mean_queue_us: float
    p99_queue_us: float
    flow_rates_bps: list
    flow_mark_fractions: list
    excluded_ratio_windows: int = 0
    drops: int = 0


@dataclass
class RunResult:
    config: ScenarioConfig
    flows: list  # FlowSeries per flow
    queue_delay_us: list  # per-window mean sojourn, us
    summary: RunSummary
    episodes: list  # per flow: list of CwrEpisode
    flow_stats: list
    conservation_ok: bool


def jain_index(rates) -> float | None:
    """(sum x)^2 / (n * sum x^2); None when every rate is zero."""
    total = 0.0
    sq = 0.0
    n = 0
    for r in rates:
        if r < 0:
            raise ValueError("rates must be non-negative")
        total += r
        sq += r * r
        n += 1
    if n == 0 or sq == 0.0:
        return None
    return (total * total) / (n * sq)


def geo_mean_ratio(samples) -> tuple[float | None, int]:
    """Geometric mean of r1/r2 across windows; zero-rate windows are excluded.

    Returns (ratio, excluded_window_count). Flow 1 of each pair is the
    established flow, so values above 1 mean the latecomer is behind.
    """
    log_sum = 0.0
    n = 0
    excluded = 0
    for r1, r2 in samples:
        if r1 <= 0.0 or r2 <= 0.0:
            excluded += 1
            continue
        log_sum += math.log(r1 / r2)
        n += 1
    if n == 0:
        return None, excluded
    return math.exp(log_sum / n), excluded


def _percentile(sorted_values, q: float) -> float:
    if not sorted_values:
        return 0.0
    idx = q * (len(sorted_values) - 1)
    lo = int(idx)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = idx - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


class _ScenarioRun:
    """Wires engine, queue and senders together and collects the series."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.sim = Simulator()
        self.rng = RandomSource(cfg.seed)
        self.queue = BottleneckQueue(
            self.sim, cfg.capacity_bps, cfg.aqm, self.rng, on_departure=self._deliver
        )
        nic_rate = int(cfg.capacity_bps * cfg.nic_rate_multiplier)
        self.senders: list[FlowSender] = []
        self.series: list[FlowSeries] = []
        n = len(cfg.flows)
        self._window_bytes = [0] * n
        self._window_marks_seen = [0] * n
        self._measure_bytes = [0] * n
        self._actual_starts = [0] * n
        bdp_cwnd = cfg.capacity_bps * cfg.base_rtt_ns // (NS_PER_SEC * 8 * cfg.seg_size)
        for idx, fc in enumerate(cfg.flows):
            parsed = parse_variant(fc.variant_code)
            prr_mode = fc.prr_override if fc.prr_override is not None else parsed.prr_mode
            tso = fc.tso_override if fc.tso_override is not None else parsed.tso
            cwnd0 = max(2, bdp_cwnd) if fc.initial_cwnd == AUTO_CWND else fc.initial_cwnd
            self.senders.append(
                FlowSender(
                    self.sim,
                    idx,
                    parsed.cca,
                    prr_mode,
                    tso,
                    self.queue,
                    srtt_init_ns=cfg.base_rtt_ns,
                    nic_rate_bps=nic_rate,
                    seg_size=cfg.seg_size,
                    alpha_init_fraction=cfg.alpha_init_fraction,
                    initial_cwnd=cwnd0,
                    emit_jitter_ns=cfg.emit_jitter_ns,
                    rng=self.rng,
                )
            )
            self.series.append(FlowSeries(flow=idx, code=fc.variant_code))
        self.queue_delay_us: list[float] = []
        self._measure_frame_bytes = 0
        self._measure_start = cfg.warmup_ns
        self._measure_end = cfg.warmup_ns + cfg.measure_ns
        self._window_jains: list[float] = []
        self._ratio_samples: list[tuple[float, float]] = []

    def _deliver(self, pkt, now: int) -> None:
        cfg = self.cfg
        flow = pkt.flow_id
        self._window_bytes[flow] += cfg.payload_size
        if self._measure_start <= now < self._measure_end:
            self._measure_bytes[flow] += cfg.payload_size
            # count link occupancy only for service rendered inside the window,
            # so utilization cannot exceed 1 through edge straddlers
            started = now - pkt.size_bytes * 8 * NS_PER_SEC // cfg.capacity_bps
            if started >= self._measure_start:
                self._measure_frame_bytes += pkt.size_bytes
        self.sim.schedule(
            now + cfg.base_rtt_ns, EventKind.ACK_ARRIVAL, self.senders[flow].on_ack, pkt
        )

    def _sample(self, window_ns: int) -> None:
        now = self.sim.now
        delay_sum, delay_count = self.queue.take_window_delay()
        mean_delay_us = (delay_sum / delay_count / NS_PER_US) if delay_count else 0.0
        self.queue_delay_us.append(mean_delay_us)
        window_rates = []
        for idx, sender in enumerate(self.senders):
            delivered_bytes = self._window_bytes[idx]
            self._window_bytes[idx] = 0
            rate = delivered_bytes * 8 * NS_PER_SEC / window_ns
            window_rates.append(rate)
            marks_now = self.queue.stats.marks_by_flow.get(idx, 0)
            marks_in_window = marks_now - self._window_marks_seen[idx]
            self._window_marks_seen[idx] = marks_now
            s = self.series[idx]
            s.times.append(now)
            s.cwnd.append(sender.cwnd)
            s.alpha.append(alpha_fraction(sender.alpha) if sender.alpha is not None else None)
            s.throughput_bps.append(rate)
            s.marks.append(marks_in_window)
        active = [
            r
            for r, started in zip(window_rates, self._actual_starts)
            if started <= now - window_ns
        ]
        if len(active) >= 2:
            j = jain_index(active)
            if j is not None:
                self._window_jains.append(j)
        if len(window_rates) == 2:
            self._ratio_samples.append((window_rates[0], window_rates[1]))

    def run(self) -> RunResult:
        cfg = self.cfg
        jitter = cfg.start_jitter_ns
        for idx, (sender, fc) in enumerate(zip(self.senders, cfg.flows)):
            start = fc.start_ns
            if jitter:
                start += int(self.rng.uniform01() * jitter)
            self._actual_starts[idx] = start
            self.sim.schedule(start, EventKind.TIMER, sender.start)
        window_ns = cfg.sample_window_rtts * cfg.base_rtt_ns
        self.sim.run_until(cfg.warmup_ns)
        # measurement starts now: reset window accumulators and record sojourns
        self.queue.take_window_delay()
        for idx in range(len(self.senders)):
            self._window_bytes[idx] = 0
            self._window_marks_seen[idx] = self.queue.stats.marks_by_flow.get(idx, 0)
        self.queue.recording = True
        n_windows = cfg.measure_ns // window_ns
        t = cfg.warmup_ns
        for _ in range(n_windows):
            t += window_ns
            self.sim.run_until(t)
            self._sample(window_ns)
        if t < self._measure_end:
            self.sim.run_until(self._measure_end)
        self.queue.recording = False
        return self._finish()

    def _finish(self) -> RunResult:
        cfg = self.cfg
        measured = cfg.measure_ns
        rates = [b * 8 * NS_PER_SEC / measured for b in self._measure_bytes]
        utilization = (
            self._measure_frame_bytes * 8 * NS_PER_SEC / (measured * cfg.capacity_bps)
        )
        jain = (
            sum(self._window_jains) / len(self._window_jains)
            if self._window_jains
            else math.nan
        )
        ratio, excluded = geo_mean_ratio(self._ratio_samples)
        sojourns = sorted(self.queue.recorded_sojourns)
        mean_q = (sum(sojourns) / len(sojourns) / NS_PER_US) if sojourns else 0.0
        p99_q = _percentile(sojourns, 0.99) / NS_PER_US
        mark_fractions = []
        for sender in self.senders:
            d = sender.stats.delivered
            mark_fractions.append(sender.stats.delivered_ce / d if d else 0.0)
        summary = RunSummary(
            jain=jain,
            geo_ratio=ratio if ratio is not None else math.nan,
            utilization=utilization,
            mean_queue_us=mean_q,
            p99_queue_us=p99_q,
            flow_rates_bps=rates,
            flow_mark_fractions=mark_fractions,
            excluded_ratio_windows=excluded,
            drops=self.queue.stats.drops,
        )
        conservation = True
        queued_by_flow: dict[int, int] = {}
        for p in self.queue.fifo:
            queued_by_flow[p.flow_id] = queued_by_flow.get(p.flow_id, 0) + 1
        for idx, sender in enumerate(self.senders):
            st = sender.stats
            outstanding = st.sent - st.delivered
            if sender.inflight != outstanding:
                conservation = False
            queued = queued_by_flow.get(idx, 0)
            dropped = self.queue.stats.drops_by_flow.get(idx, 0)
            # whatever is not delivered/queued/dropped must still be in flight
            if outstanding - queued - dropped < 0:
                conservation = False
        return RunResult(
            config=cfg,
            flows=self.series,
            queue_delay_us=self.queue_delay_us,
            summary=summary,
            episodes=[s.stats.episodes for s in self.senders],
            flow_stats=[s.stats for s in self.senders],
            conservation_ok=conservation,
        )


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Execute one scenario; deterministic for a fixed config and seed."""
    return _ScenarioRun(cfg).run()


@dataclass
class SweepRow:
    axis_value: float
    seed: int
    jain: float
    geo_ratio: float
    utilization: float
    mean_queue_us: float
    p99_queue_us: float
    error: str = ""


def _sweep_config(template: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "capacity":
        return replace(template, capacity_bps=int(value))
    if axis == "rtt":
        return replace(template, base_rtt_ns=int(value))
    raise ConfigError(f"unknown sweep axis {axis!r} (expected capacity or rtt)")


def _run_for_sweep(args):
    cfg, axis_value = args
    try:
        result = run_scenario(cfg)
        s = result.summary
        return SweepRow(
            axis_value,
            cfg.seed,
            s.jain,
            s.geo_ratio,
            s.utilization,
            s.mean_queue_us,
            s.p99_queue_us,
        )
    except Exception as exc:  # partial failures become rows, sweep continues
        return SweepRow(
            axis_value, cfg.seed, math.nan, math.nan, math.nan, math.nan, math.nan, str(exc)
        )


def sweep(
    template: ScenarioConfig,
    axis: str,
    values,
    reps: int = 5,
    parallel: int = 1,
) -> tuple[list[SweepRow], list[SweepRow]]:
    """Run `reps` seeded repetitions per axis value; returns (rows, mean rows)."""
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two axis values")
    jobs = []
    for value in values:
        for rep in range(reps):
            cfg = replace(_sweep_config(template, axis, value), seed=template.seed + rep)
            jobs.append((cfg, float(value)))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_run_for_sweep, jobs))
    else:
        rows = [_run_for_sweep(job) for job in jobs]
    means = []
    for value in values:
        group = [r for r in rows if r.axis_value == float(value) and not r.error]
        if not group:
            continue
        means.append(
            SweepRow(
                float(value),
                -1,
                _nanmean([r.jain for r in group]),
                _nanmean([r.geo_ratio for r in group]),
                _nanmean([r.utilization for r in group]),
                _nanmean([r.mean_queue_us for r in group]),
                _nanmean([r.p99_queue_us for r in group]),
            )
        )
    return rows, means


def _nanmean(values) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else math.nan


# -- CSV emission -----------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_timeseries(result: RunResult, path) -> None:
    """Fixed-order rows: one per (sample time, flow)."""
    lines = [",".join(TIMESERIES_COLUMNS)]
    n_samples = len(result.queue_delay_us)
    for i in range(n_samples):
        for s in result.flows:
            lines.append(
                ",".join(
                    (
                        str(s.times[i]),
                        str(s.flow),
                        str(s.cwnd[i]),
                        _fmt(s.alpha[i]),
                        _fmt(s.throughput_bps[i]),
                        str(s.marks[i]),
                        _fmt(result.queue_delay_us[i]),
                    )
                )
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary(rows, path) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    for r in rows:
        seed = "mean" if r.seed == -1 else str(r.seed)
        lines.append(
            ",".join(
                (
                    _fmt(r.axis_value),
                    seed,
                    _fmt(r.jain),
                    _fmt(r.geo_ratio),
                    _fmt(r.utilization),
                    _fmt(r.mean_queue_us),
                    _fmt(r.p99_queue_us),
                )
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summary_row_for_run(result: RunResult, axis_value: float = 0.0) -> SweepRow:
    s = result.summary
    return SweepRow(
        axis_value,
        result.config.seed,
        s.jain,
        s.geo_ratio,
        s.utilization,
        s.mean_queue_us,
        s.p99_queue_us,
    )
