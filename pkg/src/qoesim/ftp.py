"""Greedy window-based background senders (FTP over a Reno-like TCP)."""
from __future__ import annotations

from dataclasses import dataclass

from . import NS_PER_S, seconds
from .net import FTP, HEADER_BYTES, MAX_WIRE, Packet

SLOW_START = "slow_start"
CONGESTION_AVOIDANCE = "congestion_avoidance"
MIN_RTO = seconds(1.0)
MAX_RTO = seconds(60.0)


@dataclass
class TcpLikeState:
    cwnd: float = 2.0
    ssthresh: float = 64.0
    snd_una: int = 0
    next_seq: int = 0
    dup_acks: int = 0
    rto: int = MIN_RTO
    phase: str = SLOW_START
    srtt: int | None = None
    rttvar: int = 0
    backoff: int = 1

    @property
    def in_flight(self) -> int:
        return self.next_seq - self.snd_una

    def on_ack(self, ack_seq: int) -> bool:
        """Apply a cumulative ack. Returns True when a fast retransmit is due."""
        if ack_seq > self.snd_una:
            self.snd_una = ack_seq
            if self.next_seq < ack_seq:
                self.next_seq = ack_seq
            self.dup_acks = 0
            if self.phase == SLOW_START:
                self.cwnd += 1.0
                if self.cwnd >= self.ssthresh:
                    self.phase = CONGESTION_AVOIDANCE
            else:
                self.cwnd += 1.0 / self.cwnd
            return False
        if ack_seq == self.snd_una and self.in_flight > 0 and self.dup_acks < 3:
            self.dup_acks += 1
            if self.dup_acks == 3:
                self.ssthresh = max(self.cwnd / 2.0, 2.0)
                self.cwnd = self.ssthresh
                self.phase = CONGESTION_AVOIDANCE
                return True
        return False

    def on_timeout(self) -> None:
        self.ssthresh = max(self.cwnd / 2.0, 2.0)
        self.cwnd = 1.0
        self.phase = SLOW_START
        self.dup_acks = 0
        self.backoff = min(self.backoff * 2, 1 << 16)
        self.rto = min(self.rto * 2, MAX_RTO)
        self.next_seq = self.snd_una  # go-back-N

    def on_rtt_sample(self, sample: int) -> None:
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample // 2
        else:
            err = sample - self.srtt
            self.rttvar += (abs(err) - self.rttvar) // 4
            self.srtt += err // 8
        self.backoff = 1
        self.rto = min(max(MIN_RTO, self.srtt + 4 * self.rttvar), MAX_RTO)


class FtpSink:
    """Cumulative-ack receiver that buffers out-of-order segments."""

    def __init__(self) -> None:
        self.expected = 0
        self.out_of_order: set[int] = set()
        self.received = 0

    def on_segment(self, segment: int) -> int:
        self.received += 1
        if segment == self.expected:
            self.expected += 1
            ooo = self.out_of_order
            while self.expected in ooo:
                ooo.discard(self.expected)
                self.expected += 1
        elif segment > self.expected:
            self.out_of_order.add(segment)
        return self.expected


class FtpFlow:
    def __init__(self, sim, flow_id: int, start_at: int, max_window: int = 0) -> None:
        self.sim = sim
        self.max_window = max_window  # receiver window in segments; 0 = unlimited
        self.flow_id = flow_id
        self.start_at = start_at
        self.state = TcpLikeState()
        self.sink = FtpSink()
        self.path = sim.topo.add_flow(flow_id, self._deliver, self._dropped)
        self.sent = 0
        self.received = 0
        self.dropped = 0
        self.delivered_bytes = 0
        self.seq = 0
        self.timeouts = 0
        self._progress_at = 0
        self._timer_pending = False

    def start(self) -> None:
        self.sim.engine.schedule(self.start_at, self._begin)

    def _begin(self, _=None) -> None:
        self._progress_at = self.sim.engine.now
        self._fill_window()

    def _transmit(self, segment: int, now: int) -> None:
        self.seq += 1
        self.sent += 1
        pkt = Packet(self.sim.next_packet_id(), self.flow_id, FTP, MAX_WIRE,
                     MAX_WIRE - HEADER_BYTES, self.seq)
        pkt.segment = segment
        self.path.send(pkt, now)
        if not self._timer_pending:
            self._arm_timer(now)

    def _fill_window(self) -> None:
        st = self.state
        now = self.sim.engine.now
        limit = int(st.cwnd)
        if self.max_window and limit > self.max_window:
            limit = self.max_window
        while st.next_seq - st.snd_una < limit:
            self._transmit(st.next_seq, now)
            st.next_seq += 1

    def _arm_timer(self, now: int) -> None:
        self._timer_pending = True
        self.sim.engine.schedule(self._progress_at + self.state.rto, self._on_timer)

    def _on_timer(self, _=None) -> None:
        self._timer_pending = False
        st = self.state
        now = self.sim.engine.now
        if st.in_flight <= 0:
            return
        deadline = self._progress_at + st.rto
        if now < deadline:
            self._arm_timer(now)
            return
        self.timeouts += 1
        st.on_timeout()
        self._progress_at = now
        self._fill_window()

    def _deliver(self, pkt: Packet, now: int) -> None:
        self.received += 1
        self.delivered_bytes += pkt.payload_bytes
        ack = self.sink.on_segment(pkt.segment)
        self.sim.topo.send_reverse(now, self._on_ack, (ack, pkt.t_sent))

    def _dropped(self, pkt: Packet, now: int) -> None:
        self.dropped += 1

    def _on_ack(self, payload) -> None:
        ack, echo = payload
        st = self.state
        now = self.sim.engine.now
        if ack > st.snd_una:
            st.on_rtt_sample(now - echo)
            self._progress_at = now
            st.on_ack(ack)
        elif st.on_ack(ack):
            self._transmit(st.snd_una, now)
        self._fill_window()
