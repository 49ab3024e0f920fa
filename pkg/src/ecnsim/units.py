"""Parsing and formatting of durations and rates used by configs and the CLI."""

from __future__ import annotations

from .engine import NS_PER_MS, NS_PER_SEC, NS_PER_US

_DURATION_UNITS = {
    "ns": 1,
    "us": NS_PER_US,
    "ms": NS_PER_MS,
    "s": NS_PER_SEC,
}

_RATE_UNITS = {
    "bit": 1,
    "kbit": 10**3,
    "mbit": 10**6,
    "gbit": 10**9,
    "bps": 1,
    "kbps": 10**3,
    "mbps": 10**6,
    "gbps": 10**9,
}


def parse_duration(text) -> int:
    """'50ms' / '250us' / '2.5s' / bare int (ns) -> integer nanoseconds."""
    if isinstance(text, int):
        return text
    s = str(text).strip().lower().replace(" ", "")
    for unit in ("ns", "us", "ms", "s"):
        if s.endswith(unit):
            value = s[: -len(unit)]
            return round(float(value) * _DURATION_UNITS[unit])
    return int(s)


def parse_rate(text) -> int:
    """'200mbit' / '5gbit' / bare int (bit/s) -> integer bits per second."""
    if isinstance(text, int):
        return text
    s = str(text).strip().lower().replace(" ", "").replace("/s", "ps")
    for unit, mult in sorted(_RATE_UNITS.items(), key=lambda kv: -len(kv[0])):
        if s.endswith(unit):
            return round(float(s[: -len(unit)]) * mult)
    return int(s)


def format_duration(ns: int) -> str:
    if ns % NS_PER_SEC == 0:
        return f"{ns // NS_PER_SEC}s"
    if ns % NS_PER_MS == 0:
        return f"{ns // NS_PER_MS}ms"
    if ns % NS_PER_US == 0:
        return f"{ns // NS_PER_US}us"
    return f"{ns}ns"
