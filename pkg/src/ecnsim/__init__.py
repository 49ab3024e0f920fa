"""Packet-level simulator of ECN congestion control on a single bottleneck.

Reproduces the sender mechanisms (PRR recovery variants, TSO burst sizing,
DCTCP/Prague/ECN-CUBIC with fixed-point congestion averaging) and queue
mechanisms (step or ramp ECN marking on sojourn time or expected service
time) needed to study recovery stalls, latecomer disadvantage and
burst-biased marking.
"""

from .alpha import AlphaConfig, AlphaState, RoundAccumulator, alpha_fraction, apply_reduction, end_of_round_update
from .cca import BurstPolicy, CubicEcnVariant, DctcpVariant, ParsedVariant, parse_variant, prague_variant, variant_code
from .engine import NS_PER_MS, NS_PER_SEC, NS_PER_US, EventKind, RandomSource, SchedulingError, Simulator
from .harness import (
    ConfigError,
    FlowConfig,
    RunResult,
    ScenarioConfig,
    geo_mean_ratio,
    jain_index,
    run_scenario,
    summary_row_for_run,
    sweep,
    write_summary,
    write_timeseries,
)
from .prr import PrrMode, PrrState, enter_recovery, on_ack_sndcnt, record_sent
from .queue import AqmConfig, BottleneckQueue, DelayMetric, PacketRecord, RampShape, StepShape, delay_metric, marking_probability
from .sender import FlowSender, burst_size

__version__ = "0.1.0"
