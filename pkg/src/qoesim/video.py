"""Synthetic VBR video: quantizer-indexed frame-size traces and packetization."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import NS_PER_S
from .net import HEADER_BYTES, MAX_PAYLOAD, VIDEO, Packet

Q_MIN, Q_MAX = 2, 31
FRAME_INTERVAL_NS = round(NS_PER_S / 30)


@dataclass(frozen=True)
class ContentParams:
    """Rate model for one clip. Defaults describe a low-motion QCIF talking head."""

    frames: int = 870
    fps: int = 30
    gop: int = 30
    s_i_ref: float = 9000.0
    s_p_ref: float = 1500.0
    alpha: float = 0.75
    sigma: float = 0.2

    def __post_init__(self) -> None:
        if self.frames <= 0 or self.fps <= 0 or self.gop <= 0:
            raise ValueError("frames, fps and gop must be positive")
        if self.frames % self.gop:
            raise ValueError(f"gop={self.gop} must divide frames={self.frames}")
        if not self.s_i_ref > self.s_p_ref > 0:
            raise ValueError("need s_i_ref > s_p_ref > 0")
        if self.alpha <= 0 or self.sigma < 0:
            raise ValueError("alpha must be > 0 and sigma >= 0")

    @property
    def frame_interval(self) -> int:
        return round(NS_PER_S / self.fps)


@dataclass(frozen=True)
class FrameSpec:
    index: int
    type: str
    size_bytes: int
    display_time: int


@dataclass(frozen=True)
class VideoTrace:
    q: int
    frames: tuple[FrameSpec, ...]

    def sizes(self) -> list[int]:
        return [f.size_bytes for f in self.frames]


def check_q(q: int) -> int:
    if not isinstance(q, (int, np.integer)) or not Q_MIN <= q <= Q_MAX:
        raise ValueError(f"quantizer scale must be an integer in [{Q_MIN}, {Q_MAX}], got {q!r}")
    return int(q)


def scale(content: ContentParams, q: int) -> float:
    return (Q_MIN / q) ** content.alpha


@lru_cache(maxsize=256)
def generate_trace(content: ContentParams, q: int, seed: int) -> VideoTrace:
    """Frame sizes at quantizer ``q``.

    Size is ``round(ref(type) * (2/q)**alpha * noise)`` with log-normal noise of
    median 1. The noise sequence depends on ``seed`` only, so every quantizer
    level of a clip shares the same scene-complexity pattern.
    """
    q = check_q(q)
    rng = np.random.default_rng(seed)
    noise = np.exp(content.sigma * rng.standard_normal(content.frames))
    k = scale(content, q)
    out = []
    for i in range(content.frames):
        ftype = "I" if i % content.gop == 0 else "P"
        ref = content.s_i_ref if ftype == "I" else content.s_p_ref
        size = max(1, int(round(ref * k * float(noise[i]))))
        out.append(FrameSpec(i, ftype, size, i * content.frame_interval))
    return VideoTrace(q, tuple(out))


def nominal_rate(content: ContentParams, q: int) -> float:
    """Noise-free mean bitrate at quantizer ``q``, in bits/s."""
    q = check_q(q)
    gop_bytes = content.s_i_ref + (content.gop - 1) * content.s_p_ref
    return gop_bytes * 8 * content.fps / content.gop * scale(content, q)


def packetize(frame: FrameSpec, max_payload: int = MAX_PAYLOAD) -> list[Packet]:
    """Split a frame into packets; seq/session fields are filled by the sender."""
    if frame.size_bytes <= 0:
        raise ValueError("frame size must be positive")
    n = -(-frame.size_bytes // max_payload)
    out = []
    for k in range(n):
        payload = max_payload if k < n - 1 else frame.size_bytes - max_payload * (n - 1)
        out.append(Packet(0, 0, VIDEO, payload + HEADER_BYTES, payload, 0,
                          frame.index, frame.type))
    return out


def write_trace_csv(trace: VideoTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "type", "size_bytes", "time_ns"])
        for f in trace.frames:
            w.writerow([f.index, f.type, f.size_bytes, f.display_time])


class VideoSource:
    """Trace-driven sender for one admitted session.

    Emits one frame every frame interval, looping the trace. The quantizer in
    effect switches only at GOP boundaries.
    """

    def __init__(self, sim, session, content: ContentParams, trace_seed: int, q: int) -> None:
        self.sim = sim
        self.session = session
        self.content = content
        self.trace_seed = trace_seed
        self.q = check_q(q)
        self.pending_q = self.q
        self.frame_no = 0
        self.seq = 0
        self.t0 = sim.engine.now
        self.q_log: list[tuple[int, int]] = []  # (frame_no, q) at every switch

    def start(self) -> None:
        self.sim.engine.schedule(self.t0, self.source_tick)
        self.q_log.append((0, self.q))

    def request_q(self, q: int) -> None:
        self.pending_q = check_q(q)

    def source_tick(self, _=None) -> None:
        sim = self.sim
        now = sim.engine.now
        content = self.content
        idx = self.frame_no % content.frames
        if idx % content.gop == 0 and self.pending_q != self.q:
            self.q = self.pending_q
            self.q_log.append((self.frame_no, self.q))
        frame = generate_trace(content, self.q, self.trace_seed).frames[idx]
        session = self.session
        session.on_frame(self.frame_no, frame, now)
        path = session.path
        remaining = frame.size_bytes
        frame_no = self.frame_no
        while remaining > 0:
            payload = MAX_PAYLOAD if remaining > MAX_PAYLOAD else remaining
            remaining -= payload
            self.seq += 1
            pkt = Packet(sim.next_packet_id(), session.session_id, VIDEO,
                         payload + HEADER_BYTES, payload, self.seq, idx, frame.type, frame_no)
            session.on_send(pkt)
            path.send(pkt, now)
        self.frame_no += 1
        sim.engine.schedule(self.t0 + self.frame_no * content.frame_interval, self.source_tick)
