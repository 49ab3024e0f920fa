"""Proportional Rate Reduction in three selectable forms, plus none at all.

All three PRR modes share the proportional clause when in-flight data exceeds
the reduction target. They differ in the catch-up clause used when in-flight
data has fallen below the target:

* RFC6937      - per-ack send limit `max(surplus, delivered) + 1`, where the
                 surplus is allowance granted earlier but never sent.
* LINUX_BUGGED - per-ack send limit `delivered + 1`; any allowance the sender
                 deferred (e.g. while accumulating a TSO burst) is silently
                 discarded on the next ack, so the window cannot climb back
                 to the target within the recovery round.
* PATCHED      - the RFC limit, with the sender recomputing cwnd as
                 pipe + sndcnt on every ack so unsent allowance is
                 regenerated rather than assumed sent.
* OFF          - no PRR; the sender walks cwnd to the reduction target by at
                 most one segment per ack.

The sndcnt arithmetic of RFC6937 and PATCHED is identical; they differ only
in how the sender tracks cwnd during the episode (see tso_sender).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class PrrMode(Enum):
    RFC6937 = "rfc6937"
    LINUX_BUGGED = "linux_bugged"
    PATCHED = "patched"
    OFF = "off"


@dataclass
class PrrState:
    mode: PrrMode
    ssthresh: int
    recover_fs: int
    prr_delivered: int = 0
    prr_out: int = 0


def enter_recovery(mode: PrrMode, cwnd: int, pipe: int, ssthresh: int) -> PrrState:
    """Fresh recovery bookkeeping; recover_fs is the in-flight count at entry."""
    if ssthresh < 2:
        raise ValueError("ssthresh must be at least 2")
    return PrrState(mode=mode, ssthresh=ssthresh, recover_fs=max(pipe, 1))


def on_ack_sndcnt(state: PrrState, delivered_now: int, pipe: int) -> int:
    """Segments the sender may emit in response to this ack (never negative).

    Caller must already have added `delivered_now` to `prr_delivered`.
    """
    ssthresh = state.ssthresh
    if pipe > ssthresh:
        # proportional clause: cumulative, so deferred sends are made up later
        sndcnt = (
            state.prr_delivered * ssthresh + state.recover_fs - 1
        ) // state.recover_fs - state.prr_out
    else:
        delta = ssthresh - pipe
        if state.mode is PrrMode.LINUX_BUGGED:
            limit = delivered_now + 1
        else:
            surplus = state.prr_delivered - state.prr_out
            limit = (surplus if surplus > delivered_now else delivered_now) + 1
        sndcnt = delta if delta < limit else limit
    return sndcnt if sndcnt > 0 else 0


def record_sent(state: PrrState, sent: int) -> None:
    if sent < 0:
        raise ValueError("sent must be non-negative")
    state.prr_out += sent
