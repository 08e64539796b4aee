"""Session admission: plain bandwidth check and the QoE-aware gate."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import NS_PER_S
from .adaptation import select_quantizer
from .metrics import MosCurve, mos_from_bitrate
from .video import Q_MIN, ContentParams

BANDWIDTH_CHECK = "bandwidth_check"
QOE_AWARE = "qoe_aware"
ALWAYS_ADMIT = "always_admit"


class LinkMonitor:
    """Sliding-window video arrival rate at the bottleneck ingress."""

    def __init__(self, window: int = NS_PER_S) -> None:
        if window <= 0:
            raise ValueError("window must be positive")
        self.window = window
        self.active_sessions = 0
        self._arrivals: deque = deque()
        self._bytes = 0

    def observe(self, pkt, now: int) -> None:
        self._arrivals.append((now, pkt.wire_bytes))
        self._bytes += pkt.wire_bytes
        self._expire(now)

    def _expire(self, now: int) -> None:
        horizon = now - self.window
        arr = self._arrivals
        while arr and arr[0][0] <= horizon:
            self._bytes -= arr.popleft()[1]

    def rate(self, now: int) -> float:
        self._expire(now)
        return self._bytes * 8 * NS_PER_S / self.window

    def snapshot(self, now: int) -> "MonitorSnapshot":
        return MonitorSnapshot(self.rate(now), self.active_sessions)


@dataclass(frozen=True)
class MonitorSnapshot:
    measured_video_rate_bps: float
    active_sessions: int


@dataclass(frozen=True)
class AdmissionRequest:
    session_id: int
    t_request: int
    nominal_top_rate_bps: float

    def __post_init__(self) -> None:
        if self.nominal_top_rate_bps <= 0:
            raise ValueError("nominal_top_rate_bps must be positive")


@dataclass(frozen=True)
class AdmissionPolicy:
    kind: str = BANDWIDTH_CHECK
    beta: float = 0.9
    theta: float = 3.5
    max_sessions: int = 24

    def __post_init__(self) -> None:
        if self.kind not in (BANDWIDTH_CHECK, QOE_AWARE, ALWAYS_ADMIT):
            raise ValueError(f"unknown admission policy {self.kind!r}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if not 1 <= self.theta <= 5:
            raise ValueError(f"theta must be in [1, 5], got {self.theta}")
        if self.max_sessions < 0:
            raise ValueError("max_sessions must be >= 0")


@dataclass(frozen=True)
class Decision:
    admitted: bool
    recommended_q: int | None = None
    reason: str = ""
    measured_bps: float = 0.0
    residual_bps: float = 0.0
    predicted_mos: float | None = None


def Admit(q: int, **kw) -> Decision:
    return Decision(True, q, "", **kw)


def Reject(reason: str, **kw) -> Decision:
    return Decision(False, None, reason, **kw)


def decide(policy: AdmissionPolicy, request: AdmissionRequest, monitor: MonitorSnapshot,
           link_capacity_bps: float, mos_curve: MosCurve,
           content: ContentParams | None = None) -> Decision:
    """Pure admission rule over a monitor snapshot."""
    measured = monitor.measured_video_rate_bps
    top = request.nominal_top_rate_bps
    if policy.kind == ALWAYS_ADMIT:
        if monitor.active_sessions >= policy.max_sessions:
            return Reject("session_cap", measured_bps=measured)
        return Admit(Q_MIN, measured_bps=measured, residual_bps=link_capacity_bps - measured)
    if policy.kind == BANDWIDTH_CHECK:
        residual = link_capacity_bps - measured
        if monitor.active_sessions >= policy.max_sessions:
            return Reject("session_cap", measured_bps=measured, residual_bps=residual)
        if measured + top > link_capacity_bps:
            return Reject("capacity", measured_bps=measured, residual_bps=residual)
        return Admit(Q_MIN, measured_bps=measured, residual_bps=residual)

    residual = policy.beta * link_capacity_bps - measured
    kw = dict(measured_bps=measured, residual_bps=residual)
    if monitor.active_sessions >= policy.max_sessions:
        return Reject("session_cap", **kw)
    if residual <= 0:
        return Reject("capacity", predicted_mos=1.0, **kw)
    mos = mos_from_bitrate(min(residual, top), mos_curve)
    if mos < policy.theta:
        return Reject("qoe_below_threshold", predicted_mos=mos, **kw)
    q = select_quantizer(residual, content) if content is not None else Q_MIN
    return Admit(q, predicted_mos=mos, **kw)
