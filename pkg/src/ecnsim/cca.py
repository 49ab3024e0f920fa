"""Congestion-control variants behind one small interface.

Three families are modeled:

* DCTCP   - scalable CCA driven by the fixed-point CE average; additive
            increase is suppressed for the round following a reduction and
            the increase counter is reset on entering that round.
* PRAGUE  - DCTCP with a 20-bit upscaled, non-toggling average, additive
            increase continuing through the reduced round (except on acks
            that carry congestion feedback), the increase counter carried
            over, and a configurable max-burst duration. Runs without PRR.
* CUBIC_ECN - classical cubic window growth with a configurable multiplicative
            back-off applied to CE marks (beta in units of 1/1024).

Variant-code strings follow the letter grammar used throughout the study:
``DCTCP-PS10Tu`` reads as PRR enabled, TSO enabled, 10-bit average, toggle
on, not upscaled; capital letters switch each capability on. Prague and
cubic variants are named ``prague-1ms`` / ``prague-250us`` / ``prague-noburst``
and ``cubic-<beta>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .alpha import AlphaConfig
from .engine import NS_PER_SEC
from .prr import PrrMode

CUBIC_C = 0.4  # segments / s^3, stock constant
DEFAULT_TSO_BURST_NS = 1_000_000  # Linux max TSO burst duration: 1 ms
TSO_CAP_SEGMENTS = 44  # ~64 KB of MSS-sized payloads per TSO frame

# Prague max-burst settings are powers of two in seconds: 2^-10, 2^-12, 2^-20
PRAGUE_BURSTS_NS = {
    "1ms": NS_PER_SEC >> 10,
    "250us": NS_PER_SEC >> 12,
    "noburst": NS_PER_SEC >> 20,
}


@dataclass(frozen=True)
class BurstPolicy:
    max_burst_ns: int = DEFAULT_TSO_BURST_NS
    cap_segments: int = TSO_CAP_SEGMENTS

    def __post_init__(self):
        if self.max_burst_ns <= 0 or self.cap_segments < 1:
            raise ValueError("burst policy requires positive max_burst and cap")


@dataclass(frozen=True)
class DctcpVariant:
    alpha_cfg: AlphaConfig
    burst: BurstPolicy = BurstPolicy()
    # Prague-style behaviors, off for plain DCTCP
    ai_during_cwr: bool = False
    carry_cwnd_cnt: bool = False
    scalable = True


@dataclass(frozen=True)
class CubicEcnVariant:
    beta_1024: int = 717

    def __post_init__(self):
        if not 1 <= self.beta_1024 <= 1024:
            raise ValueError("beta must lie in [1, 1024]")

    scalable = False


def prague_variant(burst_name: str = "250us") -> DctcpVariant:
    return DctcpVariant(
        alpha_cfg=AlphaConfig(precision_bits=20, gain_shift=4, toggle=False, upscaled=True),
        burst=BurstPolicy(max_burst_ns=PRAGUE_BURSTS_NS[burst_name]),
        ai_during_cwr=True,
        carry_cwnd_cnt=True,
    )


def cubic_reaction_ssthresh(cwnd: int, beta_1024: int) -> int:
    """Window target after a CE mark: cwnd * beta / 1024, floor 2."""
    return max(2, (cwnd * beta_1024) >> 10)


@dataclass
class CubicEpoch:
    """Growth-curve state established when a reduction completes."""

    w_max: int
    k_ns: int
    start_ns: int
    cnt_acc: int = 0


def cubic_epoch(w_max: int, beta_1024: int, start_ns: int) -> CubicEpoch:
    # K = cbrt(W_max * (1 - beta) / C), converted to ns
    k_s = (w_max * (1024 - beta_1024) / 1024 / CUBIC_C) ** (1.0 / 3.0)
    return CubicEpoch(w_max=w_max, k_ns=round(k_s * NS_PER_SEC), start_ns=start_ns)


def cubic_target(epoch: CubicEpoch, now: int) -> int:
    """W(t) = C*(t - K)^3 + W_max evaluated at t = now - epoch start."""
    t = (now - epoch.start_ns - epoch.k_ns) / NS_PER_SEC
    target = epoch.w_max + CUBIC_C * t * t * t
    return max(2, int(target))


@dataclass(frozen=True)
class ParsedVariant:
    code: str
    cca: DctcpVariant | CubicEcnVariant
    prr_mode: PrrMode
    tso: bool


_DCTCP_RE = re.compile(r"^DCTCP-([Pp])([Ss])(10|20)([Tt])([Uu])$")
_PRAGUE_RE = re.compile(r"^prague-(1ms|250us|noburst)$", re.IGNORECASE)
_CUBIC_RE = re.compile(r"^cubic-(\d+)$", re.IGNORECASE)

_EXAMPLE_CODES = (
    "DCTCP-PS10Tu",
    "DCTCP-pS20tU",
    "DCTCP-Ps10tu",
    "prague-1ms",
    "prague-250us",
    "prague-noburst",
    "cubic-717",
)


def parse_variant(code: str) -> ParsedVariant:
    """Decode a variant string; letter case selects each capability.

    The PRR letter only says whether PRR runs at all; `P` maps to the fixed
    (PATCHED) form, which scenario files may override with the bugged or
    RFC forms for the regression experiments.
    """
    m = _DCTCP_RE.match(code)
    if m:
        prr_ch, tso_ch, bits, toggle_ch, up_ch = m.groups()
        upscaled = up_ch == "U"
        toggle = toggle_ch == "T"
        if upscaled and toggle:
            raise ValueError(f"{code!r}: no variant combines the toggle with upscaling")
        cca = DctcpVariant(
            alpha_cfg=AlphaConfig(
                precision_bits=int(bits),
                gain_shift=4,
                toggle=toggle,
                upscaled=upscaled,
            )
        )
        prr_mode = PrrMode.PATCHED if prr_ch == "P" else PrrMode.OFF
        return ParsedVariant(code, cca, prr_mode, tso_ch == "S")
    m = _PRAGUE_RE.match(code)
    if m:
        name = m.group(1).lower()
        return ParsedVariant(f"prague-{name}", prague_variant(name), PrrMode.OFF, True)
    m = _CUBIC_RE.match(code)
    if m:
        return ParsedVariant(
            f"cubic-{m.group(1)}",
            CubicEcnVariant(beta_1024=int(m.group(1))),
            PrrMode.PATCHED,
            True,
        )
    raise ValueError(
        f"unknown variant code {code!r}; valid forms: DCTCP-[Pp][Ss](10|20)[Tt][Uu], "
        f"prague-(1ms|250us|noburst), cubic-<beta>; e.g. {', '.join(_EXAMPLE_CODES)}"
    )


def variant_code(parsed: ParsedVariant) -> str:
    """Serialize back to the canonical code string."""
    cca = parsed.cca
    if isinstance(cca, CubicEcnVariant):
        return f"cubic-{cca.beta_1024}"
    if cca.ai_during_cwr:
        for name, ns in PRAGUE_BURSTS_NS.items():
            if cca.burst.max_burst_ns == ns:
                return f"prague-{name}"
        raise ValueError("prague variant with unnamed burst duration")
    a = cca.alpha_cfg
    return "DCTCP-{}{}{}{}{}".format(
        "P" if parsed.prr_mode is not PrrMode.OFF else "p",
        "S" if parsed.tso else "s",
        a.precision_bits,
        "T" if a.toggle else "t",
        "U" if a.upscaled else "u",
    )
