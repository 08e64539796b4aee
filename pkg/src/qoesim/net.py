"""Dumbbell network: drop-tail FIFO links and packet delivery.

A link is a single FIFO server with deterministic service times, so a
packet's serialization start and finish are fully determined the moment it
is accepted: ``start = max(now, busy_until)``.  Links therefore compute
departures at acceptance instead of scheduling a completion event, which
keeps the event count to one per router crossing.  The result is identical
to an event-per-completion model as long as arrivals are presented in time
order, which the topology guarantees.
"""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import Callable

from . import NS_PER_S, seconds
from .engine import Engine

UDP_HEADER = 8
IP_HEADER = 20
HEADER_BYTES = UDP_HEADER + IP_HEADER
MAX_WIRE = 1052
MAX_PAYLOAD = MAX_WIRE - HEADER_BYTES
CONTROL_WIRE = 40

VIDEO, FTP, ACK, REPORT = "video", "ftp", "ack", "report"


class Packet:
    __slots__ = (
        "id", "session_id", "flow_kind", "wire_bytes", "payload_bytes", "seq",
        "frame_index", "frame_type", "frame_no", "t_sent", "t_received", "path",
        "segment",
    )

    def __init__(self, id, session_id, flow_kind, wire_bytes, payload_bytes, seq,
                 frame_index=None, frame_type=None, frame_no=None, t_sent=0):
        self.id = id
        self.session_id = session_id
        self.flow_kind = flow_kind
        self.wire_bytes = wire_bytes
        self.payload_bytes = payload_bytes
        self.seq = seq
        self.frame_index = frame_index  # position within the trace
        self.frame_type = frame_type
        self.frame_no = frame_no  # emission counter across trace loops
        self.t_sent = t_sent
        self.t_received = None
        self.path = None
        self.segment = None  # TCP-like segment number; retransmits get a fresh seq

    def __repr__(self) -> str:
        return (f"Packet(session={self.session_id}, kind={self.flow_kind}, "
                f"seq={self.seq}, wire={self.wire_bytes})")


def serialization_ns(wire_bytes: int, rate_bps: int) -> int:
    """Serialization time in ns, rounded up."""
    return -(-wire_bytes * 8 * NS_PER_S // rate_bps)


class DropTailQueue:
    """Bounded FIFO of packets waiting for the transmitter.

    Entries are ``(start, finish, packet)`` for every accepted packet whose
    transmission has not finished; the head may be in service.
    """

    def __init__(self, capacity_packets: int = 2000) -> None:
        if capacity_packets < 0:
            raise ValueError(f"queue capacity must be >= 0, got {capacity_packets}")
        self.capacity_packets = capacity_packets
        self.entries: deque = deque()

    def waiting(self, now: int) -> int:
        """Packets queued behind the transmitter at ``now``."""
        n = len(self.entries)
        if n and self.entries[0][0] <= now:
            n -= 1
        return n

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class LinkRecord:
    """Per-acceptance trace of a link, used for queue-law checks."""

    accepted: list  # (now, start, finish, waiting_before, session_id, seq)
    drops: list  # (now, waiting, session_id, seq, frame_index)


class Link:
    def __init__(self, rate_bps: int, prop_delay: int, capacity_packets: int = 2000,
                 name: str = "", record: bool = False) -> None:
        if rate_bps <= 0:
            raise ValueError("link rate must be positive")
        self.rate_bps = int(rate_bps)
        self.prop_delay = int(prop_delay)
        self.queue = DropTailQueue(capacity_packets)
        self.busy_until = 0
        self.name = name
        self.record = LinkRecord([], []) if record else None
        self.delivered_bytes: dict[str, int] = {}
        self.accepted_count = 0
        self.dropped_count = 0
        self._ser_cache: dict[int, int] = {}

    def serialization(self, wire_bytes: int) -> int:
        t = self._ser_cache.get(wire_bytes)
        if t is None:
            t = self._ser_cache[wire_bytes] = serialization_ns(wire_bytes, self.rate_bps)
        return t

    def _retire(self, now: int) -> None:
        entries = self.queue.entries
        done = self.delivered_bytes
        while entries and entries[0][1] <= now:
            pkt = entries.popleft()[2]
            done[pkt.flow_kind] = done.get(pkt.flow_kind, 0) + pkt.wire_bytes

    def enqueue(self, packet: Packet, now: int) -> int | None:
        """Offer ``packet`` at ``now``.

        Returns the time its last bit reaches the far end, or ``None`` when
        the queue is full and the packet is dropped.
        """
        entries = self.queue.entries
        if entries and entries[0][1] <= now:
            self._retire(now)
        waiting = len(entries)
        if waiting and entries[0][0] <= now:
            waiting -= 1
        if waiting >= self.queue.capacity_packets:
            self.dropped_count += 1
            if self.record is not None:
                self.record.drops.append(
                    (now, waiting, packet.session_id, packet.seq, packet.frame_index))
            return None
        busy = self.busy_until
        start = busy if busy > now else now
        ser = self._ser_cache.get(packet.wire_bytes)
        if ser is None:
            ser = self.serialization(packet.wire_bytes)
        finish = start + ser
        self.busy_until = finish
        entries.append((start, finish, packet))
        self.accepted_count += 1
        if self.record is not None:
            self.record.accepted.append(
                (now, start, finish, waiting, packet.session_id, packet.seq))
        return finish + self.prop_delay

    def transmit_complete(self, now: int) -> Packet | None:
        """Retire finished transmissions; return the packet now in service, if any."""
        self._retire(now)
        entries = self.queue.entries
        if entries and entries[0][0] <= now:
            return entries[0][2]
        return None

    def finalize(self, horizon: int) -> None:
        self._retire(horizon)


class PacketLog:
    """Optional per-packet event log (send/recv/drop)."""

    COLUMNS = ("event", "time_ns", "session_id", "flow_kind", "seq", "frame_index", "wire_bytes")

    def __init__(self) -> None:
        self.rows: list[tuple] = []

    def add(self, event: str, now: int, pkt: Packet) -> None:
        self.rows.append((event, now, pkt.session_id, pkt.flow_kind, pkt.seq,
                          "" if pkt.frame_index is None else pkt.frame_index,
                          pkt.wire_bytes))

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            w.writerows(self.rows)


class Path:
    """Forward route of one flow: source access link, bottleneck, sink access link."""

    def __init__(self, topo: "Dumbbell", session_id: int, access: Link, egress: Link,
                 on_deliver: Callable[[Packet, int], None],
                 on_drop: Callable[[Packet, int], None]) -> None:
        self.topo = topo
        self.session_id = session_id
        self.access = access
        self.egress = egress
        self.on_deliver = on_deliver
        self.on_drop = on_drop

    def send(self, pkt: Packet, now: int) -> None:
        pkt.path = self
        pkt.t_sent = now
        topo = self.topo
        if topo.log is not None:
            topo.log.add("send", now, pkt)
        t = self.access.enqueue(pkt, now)
        if t is None:
            topo._dropped(pkt, now)
        else:
            topo.engine.schedule(t, topo._at_ingress, pkt)


class Dumbbell:
    """Sources -> R1 -> bottleneck -> R2 -> sinks, one source/sink pair per flow.

    The reverse direction (acks, receiver reports) is uncongested: a control
    packet takes the per-hop serialization plus propagation of the three
    reverse links, with no cross-flow queueing.
    """

    def __init__(self, engine: Engine, capacity_bps: int = 7_000_000,
                 bottleneck_delay: int = seconds(0.010), queue_capacity: int = 2000,
                 access_bps: int = 100_000_000, access_delay: int = seconds(0.001),
                 record: bool = False, packet_log: bool = False) -> None:
        self.engine = engine
        self.capacity_bps = int(capacity_bps)
        self.access_bps = int(access_bps)
        self.access_delay = int(access_delay)
        self.queue_capacity = queue_capacity
        self.bottleneck = Link(capacity_bps, bottleneck_delay, queue_capacity,
                               name="bottleneck", record=record)
        self.paths: dict[int, Path] = {}
        self.log = PacketLog() if packet_log else None
        self.ingress_observers: list[Callable[[Packet, int], None]] = []
        self._rev_cache: dict[int, int] = {}

    @property
    def propagation_sum(self) -> int:
        return 2 * self.access_delay + self.bottleneck.prop_delay

    def add_flow(self, session_id: int, on_deliver, on_drop) -> Path:
        access = Link(self.access_bps, self.access_delay, self.queue_capacity,
                      name=f"access{session_id}")
        egress = Link(self.access_bps, self.access_delay, self.queue_capacity,
                      name=f"egress{session_id}")
        path = Path(self, session_id, access, egress, on_deliver, on_drop)
        self.paths[session_id] = path
        return path

    def reverse_delay(self, wire_bytes: int = CONTROL_WIRE) -> int:
        d = self._rev_cache.get(wire_bytes)
        if d is None:
            d = (2 * serialization_ns(wire_bytes, self.access_bps)
                 + serialization_ns(wire_bytes, self.capacity_bps)
                 + self.propagation_sum)
            self._rev_cache[wire_bytes] = d
        return d

    def send_reverse(self, now: int, handler, payload, wire_bytes: int = CONTROL_WIRE) -> None:
        self.engine.schedule(now + self.reverse_delay(wire_bytes), handler, payload)

    def _at_ingress(self, pkt: Packet) -> None:
        now = self.engine.now
        for obs in self.ingress_observers:
            obs(pkt, now)
        t = self.bottleneck.enqueue(pkt, now)
        if t is None:
            self._dropped(pkt, now)
            return
        t = pkt.path.egress.enqueue(pkt, t)
        if t is None:
            self._dropped(pkt, now)
            return
        self.engine.schedule(t, self._deliver, pkt)

    def _deliver(self, pkt: Packet) -> None:
        now = self.engine.now
        pkt.t_received = now
        if self.log is not None:
            self.log.add("recv", now, pkt)
        pkt.path.on_deliver(pkt, now)

    def _dropped(self, pkt: Packet, now: int) -> None:
        if self.log is not None:
            self.log.add("drop", now, pkt)
        pkt.path.on_drop(pkt, now)

    def in_flight_by_session(self) -> dict[int, int]:
        """Count forward packets still inside the network, from pending events."""
        counts: dict[int, int] = {}
        for _, _, handler, payload in self.engine._heap:
            if isinstance(payload, Packet) and payload.path is not None and (
                    getattr(handler, "__self__", None) is self):
                counts[payload.session_id] = counts.get(payload.session_id, 0) + 1
        return counts

    def finalize(self, horizon: int) -> None:
        self.bottleneck.finalize(horizon)
