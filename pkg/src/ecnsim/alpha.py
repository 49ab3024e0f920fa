"""Fixed-point congestion-average arithmetic in every studied variant.

The moving average of the per-round CE-marked fraction is kept as a raw
integer, exactly as kernel code does, so every truncation artifact is
reproduced:

* non-upscaled storage at `precision_bits` (10 or 20) with the per-round
  increment `(delivered_ce << (nn - g)) // delivered`, which rounds the
  round's feedback down to the nearest 1/2^g and black-holes CE fractions
  below 2^(g-nn);
* the optional toggle that snaps any post-decay value below 16/1024 of full
  scale straight to zero, so the band just above zero is never rested in;
* upscaled storage at nn+g bits (the gain shift no longer truncates small
  values to zero) with increment `(delivered_ce << nn) // delivered`.

All division truncates toward zero; the black-holing behavior depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AlphaConfig:
    precision_bits: int = 10  # nn
    gain_shift: int = 4  # g: gain is 1/2^g, default 1/16
    toggle: bool = True
    upscaled: bool = False

    def __post_init__(self):
        if self.gain_shift < 1:
            raise ValueError("gain_shift must be >= 1")
        if self.precision_bits <= self.gain_shift:
            raise ValueError("precision_bits must exceed gain_shift")
        if self.upscaled and self.toggle:
            raise ValueError("upscaled storage is never combined with the toggle")

    @property
    def full_scale(self) -> int:
        """Raw value representing alpha = 1.0."""
        if self.upscaled:
            return 1 << (self.precision_bits + self.gain_shift)
        return 1 << self.precision_bits

    @property
    def toggle_floor(self) -> int:
        """Raw values below this snap to zero after decay (16/1024 of scale)."""
        return 16 << (self.precision_bits - 10)


@dataclass(frozen=True)
class AlphaState:
    raw: int
    cfg: AlphaConfig

    @classmethod
    def initial(cls, cfg: AlphaConfig, fraction: float = 1.0) -> "AlphaState":
        return cls(min(cfg.full_scale, round(fraction * cfg.full_scale)), cfg)


@dataclass
class RoundAccumulator:
    """Per-round delivery counters; the round closes when `next_seq` is acked."""

    delivered: int = 0
    delivered_ce: int = 0
    next_seq: int = 0

    def reset(self, next_seq: int) -> None:
        self.delivered = 0
        self.delivered_ce = 0
        self.next_seq = next_seq


def end_of_round_update(state: AlphaState, acc: RoundAccumulator) -> AlphaState:
    """Fold one round of CE feedback into the average; returns the new state."""
    if acc.delivered < 1:
        raise ValueError("a round must deliver at least one segment")
    cfg = state.cfg
    nn = cfg.precision_bits
    g = cfg.gain_shift
    raw = state.raw
    if cfg.upscaled:
        raw -= raw >> g
        if acc.delivered_ce:
            raw += (acc.delivered_ce << nn) // acc.delivered
            cap = 1 << (nn + g)
            if raw > cap:
                raw = cap
    else:
        raw -= raw >> g
        if cfg.toggle and raw < cfg.toggle_floor:
            raw = 0
        if acc.delivered_ce:
            raw += (acc.delivered_ce << (nn - g)) // acc.delivered
            cap = 1 << nn
            if raw > cap:
                raw = cap
    return AlphaState(raw, cfg)


def alpha_fraction(state: AlphaState) -> float:
    """Stored average as a real fraction in [0, 1]."""
    return state.raw / state.cfg.full_scale


def apply_reduction(cwnd_pkts: int, state: AlphaState) -> int:
    """Window after one congestion reaction: cwnd - (cwnd * alpha / 2), floor 2.

    Uses the same shift sequence as the integer implementation being modeled,
    so rounding matches it bit for bit.
    """
    cfg = state.cfg
    shift = cfg.precision_bits + cfg.gain_shift if cfg.upscaled else cfg.precision_bits
    decrease = ((cwnd_pkts * state.raw) >> shift) >> 1
    reduced = cwnd_pkts - decrease
    return reduced if reduced > 2 else 2
