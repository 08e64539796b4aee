"""MOS model, GOP decodability and per-session / per-architecture metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import NS_PER_S


@dataclass(frozen=True)
class MosCurve:
    r1_bps: float = 30_000.0
    r5_bps: float = 100_000.0

    def __post_init__(self) -> None:
        if not 0 < self.r1_bps < self.r5_bps:
            raise ValueError(f"need 0 < r1 < r5, got r1={self.r1_bps}, r5={self.r5_bps}")


def mos_from_bitrate(r: float, curve: MosCurve = MosCurve()) -> float:
    """Log-linear MOS between the two anchors, clamped to [1, 5]."""
    if r <= curve.r1_bps:
        return 1.0
    if r >= curve.r5_bps:
        return 5.0
    m = 1.0 + 4.0 * math.log(r / curve.r1_bps) / math.log(curve.r5_bps / curve.r1_bps)
    return min(5.0, max(1.0, m))


def decodable_frames(frame_types: Sequence[str], delivered: Iterable[int]) -> set[int]:
    """Frames whose whole reference chain arrived.

    An I-frame needs only itself; a P-frame also needs its predecessor to be
    decodable.
    """
    delivered = set(delivered)
    out = set()
    ok = False
    for i, t in enumerate(frame_types):
        if t == "I":
            ok = i in delivered
        else:
            ok = ok and i in delivered
        if ok:
            out.add(i)
    return out


class SessionRecord:
    """Lifecycle and metric accumulators for one video session."""

    def __init__(self, session_id: int, t_request: int, fps: int = 30) -> None:
        self.session_id = session_id
        self.t_request = t_request
        self.admitted = False
        self.t_start = t_request
        self.t_end = t_request
        self.fps = fps
        self.sent = 0
        self.received = 0
        self.dropped = 0
        self.delay_sum = 0
        self.jitter_sum = 0
        self.last_transit: int | None = None
        self.rtp_jitter = 0.0
        self.recv_log: list[tuple[int, int]] = []  # (t_sent, t_received)
        # per emitted frame: type, size, packets, packets received, packets dropped
        self.frame_type: list[str] = []
        self.frame_size: list[int] = []
        self.frame_pkts: list[int] = []
        self.frame_recv: list[int] = []
        self.frame_drop: list[int] = []
        self.path = None

    # -- streaming hooks -------------------------------------------------
    def on_frame(self, frame_no: int, frame, now: int) -> None:
        self.frame_type.append(frame.type)
        self.frame_size.append(frame.size_bytes)
        self.frame_pkts.append(0)
        self.frame_recv.append(0)
        self.frame_drop.append(0)

    def on_send(self, pkt) -> None:
        self.sent += 1
        self.frame_pkts[pkt.frame_no] += 1

    def on_receive(self, pkt, now: int) -> None:
        self.received += 1
        transit = now - pkt.t_sent
        self.delay_sum += transit
        last = self.last_transit
        if last is not None:
            d = transit - last if transit >= last else last - transit
            self.jitter_sum += d
            self.rtp_jitter += (d - self.rtp_jitter) / 16.0
        self.last_transit = transit
        self.recv_log.append((pkt.t_sent, now))
        self.frame_recv[pkt.frame_no] += 1

    def on_drop(self, pkt, now: int) -> None:
        self.dropped += 1
        self.frame_drop[pkt.frame_no] += 1

    # -- derived ---------------------------------------------------------
    def resolved_frames(self) -> int:
        """Length of the prefix of emitted frames whose fate is known."""
        n = 0
        for pk, rc, dr in zip(self.frame_pkts, self.frame_recv, self.frame_drop):
            if rc + dr < pk:
                break
            n += 1
        return n

    def delivered_set(self, upto: int) -> set[int]:
        return {i for i in range(upto) if self.frame_recv[i] == self.frame_pkts[i]}

    def decodable(self) -> set[int]:
        n = self.resolved_frames()
        return decodable_frames(self.frame_type[:n], self.delivered_set(n))

    def decodable_ratio(self) -> float:
        n = self.resolved_frames()
        if n == 0:
            return 0.0
        return len(self.decodable()) / n

    def mos_series(self, curve: MosCurve) -> list[float]:
        n = self.resolved_frames()
        dec = self.decodable()
        out = []
        fps = self.fps
        for s in range(n // fps):
            bits = 8 * sum(self.frame_size[i] for i in range(s * fps, (s + 1) * fps) if i in dec)
            out.append(mos_from_bitrate(bits, curve))
        return out


def session_mos(record: SessionRecord, curve: MosCurve = MosCurve()) -> float:
    series = record.mos_series(curve)
    if not series:
        return 1.0
    return sum(series) / len(series)


def successful(record: SessionRecord, delta: float = 0.75) -> bool:
    return record.received >= 1 and record.decodable_ratio() >= delta


def packet_metrics(record: SessionRecord, estimator: str = "mean_abs") -> tuple[float, float, float]:
    """(mean delay ns, mean jitter ns, drop ratio) from streaming accumulators."""
    mean_delay = record.delay_sum / record.received if record.received else 0.0
    if record.received < 2:
        jitter = 0.0
    elif estimator == "rtp":
        jitter = record.rtp_jitter
    else:
        jitter = record.jitter_sum / (record.received - 1)
    drop_ratio = record.dropped / record.sent if record.sent else 0.0
    return mean_delay, jitter, drop_ratio


def jitter_from_log(recv_log: Sequence[tuple[int, int]]) -> float:
    """Mean absolute transit-time difference recomputed from raw send/receive times."""
    if len(recv_log) < 2:
        return 0.0
    transit = [r - s for s, r in recv_log]
    total = sum(abs(b - a) for a, b in zip(transit, transit[1:]))
    return total / (len(transit) - 1)


def utilization(bottleneck_log, capacity_bps: float, horizon: int) -> float:
    """Delivered wire bits over capacity x horizon.

    ``bottleneck_log`` is either a byte total or an iterable of delivered
    packet sizes in bytes.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    total = bottleneck_log if isinstance(bottleneck_log, (int, float)) else sum(bottleneck_log)
    return total * 8 / (capacity_bps * horizon / NS_PER_S)


def cdf(values: Iterable[float]) -> list[tuple[float, float]]:
    vals = sorted(values)
    n = len(vals)
    out: list[tuple[float, float]] = []
    for i, v in enumerate(vals):
        if i + 1 < n and vals[i + 1] == v:
            continue
        out.append((v, (i + 1) / n))
    return out


METRICS = ("mean_mos", "successful_sessions", "drop_ratio", "mean_delay", "mean_jitter", "utilization")


@dataclass
class ArchitectureSummary:
    architecture: str
    mean_mos: float
    successful_sessions: int
    mean_delay: float
    mean_jitter: float
    drop_ratio: float
    utilization: float
    requested: int = 0
    admitted: int = 0
    video_utilization: float = 0.0
    cdfs: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    def metric(self, name: str) -> float:
        return float(getattr(self, name))
