"""Deterministic discrete-event kernel with a unit-disk radio model.

Events execute in (time, sequence) order; time is 64-bit unsigned
microseconds. Each node owns one FIFO device queue with a byte capacity
and a residency time-limit; service time is bytes * 8 / data_rate and a
transmission reaches every in-range receiver (one for unicast), subject
to an optional per-receiver Bernoulli loss draw.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .mobility import Trajectory
from .records import (
    PKT_DELIVERED,
    PKT_IN_FLIGHT_AT_END,
    PKT_LOSS,
    PKT_OUT_OF_RANGE,
    PKT_OVERFLOW,
    PKT_RESIDENCY,
    PKT_SUBMITTED,
    PKT_TRANSMITTED,
    PKT_UNSENT_AT_END,
    RunTrace,
)

EVENT_TIMER = "timer"
EVENT_PACKET_DELIVERY = "packet_delivery"
EVENT_TRAFFIC = "traffic_generation"

# Every simulated packet rides in one IPv4/UDP datagram; on-air sizes,
# queue occupancy, and byte counters all include this encapsulation.
IP_UDP_HEADER_BYTES = 20 + 8


@dataclass(slots=True)
class SimEvent:
    time: int
    sequence: int
    kind: str
    fn: Callable[[], None]


class Simulator:
    """Event heap with deterministic (time, sequence) ordering."""

    def __init__(self) -> None:
        self.now = 0
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._seq = 0
        self.events_run = 0

    def schedule(self, time_us: int, kind: str, fn: Callable[[], None]) -> SimEvent:
        if time_us < self.now:
            raise ValueError(f"cannot schedule at {time_us} before now {self.now}")
        event = SimEvent(time_us, self._seq, kind, fn)
        heapq.heappush(self._heap, (time_us, self._seq, event))
        self._seq += 1
        return event

    def run(self, end_us: int) -> None:
        """Execute events with time <= end_us; leaves now at end_us."""
        while self._heap and self._heap[0][0] <= end_us:
            _, _, event = heapq.heappop(self._heap)
            self.now = event.time
            event.fn()
            self.events_run += 1
        self.now = end_us


def service_time_us(size_bytes: int, data_rate_bps: float) -> int:
    """Transmission time for a packet, rounded up to whole microseconds."""
    rate = int(round(data_rate_bps))
    if rate <= 0:
        raise ValueError("data_rate must be positive")
    return (size_bytes * 8 * 1_000_000 + rate - 1) // rate


@dataclass(slots=True)
class LinkModel:
    """Radio abstraction: shared rate, unit-disk range, optional loss."""

    data_rate_bps: float
    radio_range_m: float
    loss_probability: float = 0.0
    propagation_delay_s: float = 0.0

    def __post_init__(self) -> None:
        if self.data_rate_bps <= 0:
            raise ValueError("data_rate_bps must be positive")
        if self.radio_range_m <= 0:
            raise ValueError("radio_range_m must be positive")
        if not 0.0 <= self.loss_probability < 1.0:
            raise ValueError("loss_probability must be in [0, 1)")
        if self.propagation_delay_s < 0:
            raise ValueError("propagation_delay_s must be non-negative")


@dataclass(slots=True)
class Packet:
    """One link-layer packet; msg_dst mirrors the encapsulated IP destination."""

    src: int
    dst: int | None  # None = broadcast
    port: int
    data: bytes
    kind: str
    msg_dst: int | None = None

    @property
    def size(self) -> int:
        return len(self.data) + IP_UDP_HEADER_BYTES


@dataclass(slots=True)
class DeviceQueue:
    """FIFO link-layer queue with byte capacity and residency time-limit."""

    capacity_bytes: int
    residency_limit_us: int
    fifo: deque[tuple[Packet, int]] = field(default_factory=deque)
    used_bytes: int = 0
    busy: bool = False

    def fits(self, size: int) -> bool:
        return self.used_bytes + size <= self.capacity_bytes


class RadioNetwork:
    """Binds trajectories, device queues, and protocol nodes to the kernel."""

    def __init__(
        self,
        sim: Simulator,
        link: LinkModel,
        trajectories: list[Trajectory],
        queue_capacity_bytes: int,
        queue_residency_us: int,
        loss_rng: random.Random,
        trace: RunTrace,
    ) -> None:
        self.sim = sim
        self.link = link
        self.trajectories = trajectories
        self.trace = trace
        self._loss_rng = loss_rng
        self._prop_us = int(round(link.propagation_delay_s * 1_000_000))
        self._range_sq = link.radio_range_m * link.radio_range_m
        self._queues = [
            DeviceQueue(queue_capacity_bytes, queue_residency_us)
            for _ in trajectories
        ]
        # address -> packet handler(sender_addr, port, data, msg_dst, now)
        self._handlers: dict[int, Callable[[int, int, bytes, int | None, int], None]] = {}
        # Deliveries scheduled but not yet executed (propagation in flight).
        self._in_flight: dict[int, tuple[Packet, int]] = {}
        self._in_flight_seq = 0
        # Test hook: called as tap(event, packet, receiver_or_None, now).
        self.taps: list[Callable[[str, Packet, int | None, int], None]] = []

    @property
    def node_count(self) -> int:
        return len(self.trajectories)

    def attach(
        self,
        address: int,
        handler: Callable[[int, int, bytes, int | None, int], None],
    ) -> None:
        if address in self._handlers:
            raise ValueError(f"duplicate node address {address}")
        self._handlers[address] = handler

    def position(self, node: int, t_us: int) -> tuple[float, float]:
        return self.trajectories[node].position_at(t_us / 1_000_000)

    def in_range(self, a: int, b: int, t_us: int) -> bool:
        ax, ay = self.position(a, t_us)
        bx, by = self.position(b, t_us)
        dx, dy = ax - bx, ay - by
        return dx * dx + dy * dy <= self._range_sq

    def submit(self, packet: Packet) -> None:
        """Place a packet on its sender's device queue (tail-drop on overflow)."""
        now = self.sim.now
        self.trace.packet_event(
            packet.kind, PKT_SUBMITTED, packet.size, packet.src, packet.dst
        )
        queue = self._queues[packet.src]
        if not queue.fits(packet.size):
            self._drop(packet, PKT_OVERFLOW, now)
            return
        queue.fifo.append((packet, now))
        queue.used_bytes += packet.size
        if not queue.busy:
            self._serve(packet.src)

    def _serve(self, node: int) -> None:
        queue = self._queues[node]
        now = self.sim.now
        while queue.fifo:
            packet, enqueued_at = queue.fifo[0]
            if now - enqueued_at > queue.residency_limit_us:
                queue.fifo.popleft()
                queue.used_bytes -= packet.size
                self._drop(packet, PKT_RESIDENCY, now)
                continue
            queue.busy = True
            done = now + service_time_us(packet.size, self.link.data_rate_bps)
            self.sim.schedule(done, EVENT_TIMER, lambda n=node: self._complete(n))
            return
        queue.busy = False

    def _complete(self, node: int) -> None:
        queue = self._queues[node]
        packet, _ = queue.fifo.popleft()
        queue.used_bytes -= packet.size
        queue.busy = False
        now = self.sim.now
        self.trace.packet_event(
            packet.kind, PKT_TRANSMITTED, packet.size, packet.src, packet.dst
        )
        for tap in self.taps:
            tap("transmit", packet, None, now)
        if packet.dst is None:
            receivers = [
                other
                for other in range(self.node_count)
                if other != node and self.in_range(node, other, now)
            ]
            for receiver in receivers:
                self._try_deliver(packet, receiver, now)
        else:
            if self.in_range(node, packet.dst, now):
                self._try_deliver(packet, packet.dst, now)
            else:
                self._drop(packet, PKT_OUT_OF_RANGE, now, receiver=packet.dst)
        self._serve(node)

    def _try_deliver(self, packet: Packet, receiver: int, now: int) -> None:
        if self.link.loss_probability > 0.0:
            if self._loss_rng.random() < self.link.loss_probability:
                self._drop(packet, PKT_LOSS, now, receiver=receiver)
                return
        token = self._in_flight_seq
        self._in_flight_seq += 1
        self._in_flight[token] = (packet, receiver)
        self.sim.schedule(
            now + self._prop_us,
            EVENT_PACKET_DELIVERY,
            lambda t=token: self._deliver(t),
        )

    def _deliver(self, token: int) -> None:
        packet, receiver = self._in_flight.pop(token)
        now = self.sim.now
        self.trace.packet_event(
            packet.kind, PKT_DELIVERED, packet.size, packet.src, receiver
        )
        for tap in self.taps:
            tap("deliver", packet, receiver, now)
        handler = self._handlers.get(receiver)
        if handler is not None:
            handler(packet.src, packet.port, packet.data, packet.msg_dst, now)

    def _drop(
        self, packet: Packet, outcome: str, now: int, receiver: int | None = None
    ) -> None:
        dst = receiver if receiver is not None else packet.dst
        self.trace.packet_event(packet.kind, outcome, packet.size, packet.src, dst)
        for tap in self.taps:
            tap(outcome, packet, receiver, now)

    def finalize(self) -> None:
        """Account packets still queued or still propagating at run end."""
        now = self.sim.now
        for queue in self._queues:
            for packet, _ in queue.fifo:
                self._drop(packet, PKT_UNSENT_AT_END, now)
            queue.fifo.clear()
            queue.used_bytes = 0
        for packet, receiver in self._in_flight.values():
            self._drop(packet, PKT_IN_FLIGHT_AT_END, now, receiver=receiver)
        self._in_flight.clear()


class NodeTransport:
    """Per-node facade over the radio network and scheduler."""

    def __init__(self, network: RadioNetwork, node_id: int) -> None:
        self._network = network
        self._node_id = node_id

    def broadcast(self, port: int, data: bytes, kind: str) -> None:
        self._network.submit(Packet(self._node_id, None, port, data, kind))

    def unicast(
        self, dst: int, port: int, data: bytes, kind: str, msg_dst: int | None = None
    ) -> None:
        self._network.submit(
            Packet(self._node_id, dst, port, data, kind, msg_dst)
        )

    def schedule(self, time_us: int, fn: Callable[[], None]) -> None:
        self._network.sim.schedule(time_us, EVENT_TIMER, fn)

    @property
    def now(self) -> int:
        return self._network.sim.now
