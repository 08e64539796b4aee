"""Application-layer rate adaptation driven by receiver loss/RTT reports."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from . import NS_PER_S
from .net import MAX_WIRE
from .video import Q_MAX, Q_MIN, ContentParams, check_q, nominal_rate

HISTORY_WEIGHTS = (1.0, 1.0, 1.0, 1.0, 0.8, 0.6, 0.4, 0.2)
RTT_GAIN = 1 / 8


@dataclass(frozen=True)
class ReceiverReport:
    session_id: int
    interval_end: int
    received: int
    expected: int
    loss_fraction: float
    loss_event_rate: float
    rtt_sample: int
    recv_rate_bps: float
    # echo of the newest data packet: its send time and how long the receiver held it
    echo_sent: int = 0
    echo_hold: int = 0


@dataclass
class AdaptationState:
    current_q: int
    smoothed_rtt: int
    allowed_rate_bps: float
    loss_history: deque = field(default_factory=lambda: deque(maxlen=len(HISTORY_WEIGHTS)))
    last_interval_end: int = -1
    rtt_sampled: bool = False

    def __post_init__(self) -> None:
        check_q(self.current_q)


def tfrc_allowed_rate(s: float, rtt: float, p: float, current: float = 0.0,
                      cap: float = math.inf) -> float:
    """TCP-friendly sending rate in bits/s for packet size ``s`` bytes and ``rtt`` seconds.

    With no loss the rate doubles from ``current`` up to ``cap``.
    """
    if s <= 0 or rtt <= 0 or not 0.0 <= p <= 1.0:
        raise ValueError(f"invalid arguments s={s}, rtt={rtt}, p={p}")
    if p == 0:
        return min(2.0 * current, cap)
    t_rto = 4.0 * rtt
    denom = rtt * math.sqrt(2.0 * p / 3.0) + t_rto * 3.0 * math.sqrt(3.0 * p / 8.0) * p * (1.0 + 32.0 * p * p)
    return 8.0 * s / denom


def select_quantizer(allowed_rate: float, content: ContentParams) -> int:
    """Finest quantizer whose nominal rate fits ``allowed_rate``; the coarsest if none does."""
    for q in range(Q_MIN, Q_MAX + 1):
        if nominal_rate(content, q) <= allowed_rate:
            return q
    return Q_MAX


def loss_event_rate(history) -> float:
    if not history:
        return 0.0
    recent = list(reversed(history))
    w = HISTORY_WEIGHTS[:len(recent)]
    return sum(a * b for a, b in zip(w, recent)) / sum(w)


def on_report(state: AdaptationState, report: ReceiverReport, content: ContentParams,
              policy: str = "tfrc", packet_size: int = MAX_WIRE) -> int:
    """Fold one receiver report into ``state`` and return the new quantizer."""
    if report.interval_end <= state.last_interval_end:
        return state.current_q
    state.last_interval_end = report.interval_end
    if report.rtt_sample > 0:
        if state.rtt_sampled:
            state.smoothed_rtt = round((1 - RTT_GAIN) * state.smoothed_rtt + RTT_GAIN * report.rtt_sample)
        else:
            state.smoothed_rtt = report.rtt_sample
            state.rtt_sampled = True
    state.loss_history.append(report.loss_fraction)
    if policy == "aimd":
        q = state.current_q
        if report.loss_fraction > 0:
            q = min(Q_MAX, int(q * 1.25 + 0.5))
        else:
            q = max(Q_MIN, q - 1)
        state.current_q = q
        state.allowed_rate_bps = nominal_rate(content, q)
        return q
    if policy != "tfrc":
        raise ValueError(f"unknown adaptation policy {policy!r}")
    p = loss_event_rate(state.loss_history)
    state.allowed_rate_bps = tfrc_allowed_rate(
        packet_size, state.smoothed_rtt / NS_PER_S, p,
        current=state.allowed_rate_bps, cap=nominal_rate(content, Q_MIN))
    state.current_q = select_quantizer(state.allowed_rate_bps, content)
    return state.current_q


class VideoReceiver:
    """Per-session receiver: counts arrivals and emits one report per interval."""

    def __init__(self, session_id: int, interval: int = NS_PER_S) -> None:
        self.session_id = session_id
        self.interval = interval
        self.received = 0
        self.bytes = 0
        self.max_seq = 0
        self.prev_max_seq = 0
        self.last_sent = 0
        self.last_received = 0
        self.history: deque = deque(maxlen=len(HISTORY_WEIGHTS))

    def on_packet(self, pkt, now: int) -> None:
        self.received += 1
        self.bytes += pkt.wire_bytes
        if pkt.seq > self.max_seq:
            self.max_seq = pkt.seq
        self.last_sent = pkt.t_sent
        self.last_received = now

    def make_report(self, now: int) -> ReceiverReport | None:
        """Close the current interval; ``None`` if nothing arrived in it."""
        if self.received == 0:
            return None
        expected = max(self.max_seq - self.prev_max_seq, self.received)
        loss = (expected - self.received) / max(expected, 1)
        self.history.append(loss)
        report = ReceiverReport(
            session_id=self.session_id, interval_end=now, received=self.received,
            expected=expected, loss_fraction=loss,
            loss_event_rate=loss_event_rate(self.history), rtt_sample=0,
            recv_rate_bps=self.bytes * 8 * NS_PER_S / self.interval,
            echo_sent=self.last_sent, echo_hold=now - self.last_received)
        self.prev_max_seq = self.max_seq
        self.received = 0
        self.bytes = 0
        return report
