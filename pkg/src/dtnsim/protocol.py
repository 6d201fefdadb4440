"""Epidemic routing state machine for one node.

Discovery: periodic jittered beacons. A neighbor is live while anything
was heard from it within two beacon intervals; beacons themselves refresh
a record only once it has gone stale, which is what restarts the summary
exchange on an otherwise idle contact and prevents re-exchanges on a busy
one.

Anti-entropy: on a new contact the side with the lower address sends its
buffer summary (REPLY, fragmented); the higher side answers with its own
summary (REPLY_BACK) and both sides then send the messages the peer
lacks, one complete message per neighbor at a time, gated by hop-by-hop
ACKs. Receivers keep one reception buffer per neighbor; a reassembled
message has its hop budget decremented, is dropped when expired or out of
hops, and is otherwise stored (and counted as delivered at its
destination).

Control and data packets travel on distinct logical channels, standing in
for the two UDP ports of an IP convergence layer.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Protocol

from .buffer import (
    REJECT_DUPLICATE,
    REJECT_EXPIRED,
    REJECT_TOO_LARGE,
    EnqueueOutcome,
    MessageBuffer,
    QueueEntry,
)
from .records import (
    KIND_ACK,
    KIND_BEACON,
    KIND_DATA,
    KIND_REPLY,
    KIND_REPLY_BACK,
    MSG_ARRIVAL_EXPIRED,
    MSG_DUPLICATE,
    MSG_EVICTED,
    MSG_EXPIRED,
    MSG_HOP_EXHAUSTED,
    MSG_PARTIAL_DISCONNECT,
    MSG_PARTIAL_RESET,
    MSG_TOO_LARGE,
    PKT_MALFORMED,
    MessageDelivered,
    MessageDropped,
    MessageGenerated,
    RunTrace,
    TransferCompleted,
)
from .wire import (
    DATA_PACKET_SIZE,
    EPIDEMIC_SIZE,
    SUMMARY_HEAD_SIZE,
    AckHeader,
    DataPacketHeader,
    EpidemicHeader,
    MessageId,
    MessageTypeHeader,
    MsgType,
    SummaryVectorHeader,
    WireError,
    make_message_id,
)

PORT_CONTROL = 1
PORT_DATA = 2

SESSION_IDLE = "idle"
SESSION_AWAITING_REPLY_BACK = "awaiting_reply_back"
SESSION_EXCHANGING = "exchanging"

_REJECT_CAUSE = {
    REJECT_DUPLICATE: MSG_DUPLICATE,
    REJECT_EXPIRED: MSG_ARRIVAL_EXPIRED,
    REJECT_TOO_LARGE: MSG_TOO_LARGE,
}


@dataclass(slots=True)
class ProtocolConfig:
    """Per-node protocol parameters; time fields are seconds."""

    beacon_interval: float = 1.0
    beacon_randomness: float = 0.1
    buffer_capacity: int = 5_000_000
    message_ttl: float = 3600.0
    hop_limit: int = 50
    max_control_payload: int = 1400

    def __post_init__(self) -> None:
        if self.beacon_interval <= 0:
            raise ValueError("beacon_interval must be positive")
        if self.beacon_randomness < 0:
            raise ValueError("beacon_randomness must be non-negative")
        if self.buffer_capacity <= 0:
            raise ValueError("buffer_capacity must be positive")
        if self.message_ttl <= 0:
            raise ValueError("message_ttl must be positive")
        if self.hop_limit <= 0:
            raise ValueError("hop_limit must be positive")
        if self.max_control_payload < SUMMARY_HEAD_SIZE + 8:
            raise ValueError("max_control_payload must fit at least one id (12 bytes)")

    @property
    def beacon_interval_us(self) -> int:
        return int(round(self.beacon_interval * 1_000_000))

    @property
    def beacon_randomness_us(self) -> int:
        return int(round(self.beacon_randomness * 1_000_000))

    @property
    def message_ttl_us(self) -> int:
        return int(round(self.message_ttl * 1_000_000))


def build_summary_fragments(
    ids: list[MessageId], max_control_payload: int
) -> list[SummaryVectorHeader]:
    """Split a summary into fragments whose encodings fit the payload cap.

    Order is preserved; every fragment except the last carries
    frag_block=1. An empty summary still yields one (empty) fragment so
    the exchange proceeds.
    """
    per_fragment = (max_control_payload - SUMMARY_HEAD_SIZE) // 8
    if per_fragment < 1:
        raise ValueError("max_control_payload too small for one id")
    if not ids:
        return [SummaryVectorHeader(0, ())]
    chunks = [ids[i : i + per_fragment] for i in range(0, len(ids), per_fragment)]
    return [
        SummaryVectorHeader(1 if i < len(chunks) - 1 else 0, tuple(chunk))
        for i, chunk in enumerate(chunks)
    ]


@dataclass(slots=True)
class NeighborRecord:
    node_id: int
    address: int
    last_heard: int
    session: str = SESSION_IDLE
    summary_accum: list[MessageId] = field(default_factory=list)


@dataclass(slots=True)
class ReceptionBuffer:
    """Per-neighbor reassembly state; holds at most one message."""

    from_neighbor: int
    message_id: MessageId | None = None
    packet_total: int = 0
    received: dict[int, bytes] = field(default_factory=dict)
    hop_count: int = 0
    msg_dst: int | None = None

    def reset(self) -> None:
        self.message_id = None
        self.packet_total = 0
        self.received = {}
        self.hop_count = 0
        self.msg_dst = None


@dataclass(slots=True)
class SendPipeline:
    """Messages queued toward one neighbor; one in flight at a time."""

    pending: deque[MessageId] = field(default_factory=deque)
    in_flight: MessageId | None = None


class Transport(Protocol):
    def broadcast(self, port: int, data: bytes, kind: str) -> None: ...

    def unicast(
        self, dst: int, port: int, data: bytes, kind: str, msg_dst: int | None = None
    ) -> None: ...

    def schedule(self, time_us: int, fn) -> None: ...


class EpidemicNode:
    """One node's routing state, driven by packet and timer events."""

    def __init__(
        self,
        node_id: int,
        address: int,
        config: ProtocolConfig,
        transport: Transport,
        trace: RunTrace,
        beacon_rng: random.Random,
    ) -> None:
        self.node_id = node_id
        self.address = address
        self.config = config
        self.transport = transport
        self.trace = trace
        self._rng = beacon_rng
        self.buffer = MessageBuffer(config.buffer_capacity, config.message_ttl_us)
        self.neighbors: dict[int, NeighborRecord] = {}
        self.reception: dict[int, ReceptionBuffer] = {}
        self.pipelines: dict[int, SendPipeline] = {}
        self.delivered_ids: set[MessageId] = set()
        self._interval_us = config.beacon_interval_us
        self._liveness_us = 2 * config.beacon_interval_us
        self._ttl_us = config.message_ttl_us

    # -- timers ----------------------------------------------------------

    def start(self, now: int) -> None:
        """Schedule the first beacon one interval (plus jitter) from now."""
        self.transport.schedule(now + self._interval_us + self._jitter_us(), self._beacon_tick)

    def _jitter_us(self) -> int:
        r = self.config.beacon_randomness_us
        return int(self._rng.random() * r) if r else 0

    def _beacon_tick(self) -> None:
        now = self.transport.now
        self.check_connections(now)
        for mid in self.buffer.drop_expired(now):
            self._drop_msg(now, mid, MSG_EXPIRED)
        beacon = MessageTypeHeader(MsgType.BEACON, self.node_id).encode()
        self.transport.broadcast(PORT_CONTROL, beacon, KIND_BEACON)
        self.transport.schedule(now + self._interval_us + self._jitter_us(), self._beacon_tick)

    def check_connections(self, now: int) -> None:
        """Drop neighbors silent for at least two beacon intervals."""
        stale = [
            nb for nb in self.neighbors.values()
            if now - nb.last_heard >= self._liveness_us
        ]
        for nb in stale:
            self._teardown_session(nb, now)
            del self.neighbors[nb.node_id]

    # -- packet dispatch --------------------------------------------------

    def handle_packet(
        self, sender_addr: int, port: int, data: bytes, msg_dst: int | None, now: int
    ) -> None:
        try:
            if port == PORT_DATA:
                epi = EpidemicHeader.decode(data)
                dph = DataPacketHeader.decode(data[EPIDEMIC_SIZE:])
                payload = data[EPIDEMIC_SIZE + DATA_PACKET_SIZE :]
                self.on_data_packet(epi, dph, payload, sender_addr, msg_dst, now)
                return
            mth = MessageTypeHeader.decode(data)
            rest = data[3:]
            if mth.msg_type is MsgType.BEACON:
                self.on_beacon(mth, sender_addr, now)
            elif mth.msg_type is MsgType.REPLY:
                self.on_reply(mth.node_id, sender_addr, SummaryVectorHeader.decode(rest), now)
            elif mth.msg_type is MsgType.REPLY_BACK:
                self.on_reply_back(
                    mth.node_id, sender_addr, SummaryVectorHeader.decode(rest), now
                )
            else:
                self.on_ack(AckHeader.decode(rest), sender_addr, now)
        except WireError:
            kind = KIND_DATA if port == PORT_DATA else "control"
            self.trace.packet_event(
                kind, PKT_MALFORMED, len(data), sender_addr, self.node_id
            )

    # -- discovery --------------------------------------------------------

    def on_beacon(self, hdr: MessageTypeHeader, sender_addr: int, now: int) -> None:
        """A beacon starts an exchange only on new or stale connections."""
        existing = self.neighbors.get(hdr.node_id)
        if existing is not None and now - existing.last_heard < self._liveness_us:
            return
        if existing is not None:
            self._teardown_session(existing, now)
            del self.neighbors[hdr.node_id]
        nb = NeighborRecord(hdr.node_id, sender_addr, last_heard=now)
        self.neighbors[hdr.node_id] = nb
        if self._leads(sender_addr, hdr.node_id):
            self._send_summary(MsgType.REPLY, nb, now)
            nb.session = SESSION_AWAITING_REPLY_BACK

    def _leads(self, other_addr: int, other_node: int) -> bool:
        # Lower address leads the exchange; node id breaks address ties.
        return (self.address, self.node_id) < (other_addr, other_node)

    def _touch_neighbor(self, node_id: int, sender_addr: int, now: int) -> NeighborRecord:
        nb = self.neighbors.get(node_id)
        if nb is None:
            nb = NeighborRecord(node_id, sender_addr, last_heard=now)
            self.neighbors[node_id] = nb
        else:
            nb.last_heard = now
            nb.address = sender_addr
        return nb

    def _teardown_session(self, nb: NeighborRecord, now: int) -> None:
        rx = self.reception.pop(nb.node_id, None)
        if rx is not None and rx.message_id is not None:
            self._drop_msg(now, rx.message_id, MSG_PARTIAL_DISCONNECT)
        self.pipelines.pop(nb.node_id, None)
        nb.summary_accum.clear()
        nb.session = SESSION_IDLE

    # -- anti-entropy exchange ---------------------------------------------

    def on_reply(
        self, sender_node: int, sender_addr: int, frag: SummaryVectorHeader, now: int
    ) -> None:
        nb = self._touch_neighbor(sender_node, sender_addr, now)
        if self._leads(sender_addr, sender_node):
            return  # REPLY is sent by the leading side; ignore on violation
        nb.summary_accum.extend(frag.ids)
        if frag.frag_block == 0:
            remote = set(nb.summary_accum)
            nb.summary_accum.clear()
            self._send_summary(MsgType.REPLY_BACK, nb, now)
            self._load_pipeline(nb, remote, now)

    def on_reply_back(
        self, sender_node: int, sender_addr: int, frag: SummaryVectorHeader, now: int
    ) -> None:
        nb = self._touch_neighbor(sender_node, sender_addr, now)
        if not self._leads(sender_addr, sender_node):
            return
        nb.summary_accum.extend(frag.ids)
        if frag.frag_block == 0:
            remote = set(nb.summary_accum)
            nb.summary_accum.clear()
            self._load_pipeline(nb, remote, now)

    def _send_summary(self, msg_type: MsgType, nb: NeighborRecord, now: int) -> None:
        for mid in self.buffer.drop_expired(now):
            self._drop_msg(now, mid, MSG_EXPIRED)
        kind = KIND_REPLY if msg_type is MsgType.REPLY else KIND_REPLY_BACK
        envelope = MessageTypeHeader(msg_type, self.node_id).encode()
        for frag in build_summary_fragments(
            self.buffer.summary(), self.config.max_control_payload
        ):
            self.transport.unicast(nb.address, PORT_CONTROL, envelope + frag.encode(), kind)

    def _load_pipeline(self, nb: NeighborRecord, remote: set[MessageId], now: int) -> None:
        pipeline = self.pipelines.setdefault(nb.node_id, SendPipeline())
        pipeline.pending = deque(self.buffer.find_disjoint(remote))
        nb.session = SESSION_EXCHANGING
        self._advance_pipeline(nb, now)

    # -- message transfer ---------------------------------------------------

    def _advance_pipeline(self, nb: NeighborRecord, now: int) -> None:
        pipeline = self.pipelines.get(nb.node_id)
        if pipeline is None or pipeline.in_flight is not None:
            return
        while pipeline.pending:
            mid = pipeline.pending.popleft()
            entry = self.buffer.get(mid)
            if entry is None:
                continue  # evicted or expired since the pipeline was built
            self._send_message(nb, entry)
            pipeline.in_flight = mid
            return
        nb.session = SESSION_IDLE

    def _send_message(self, nb: NeighborRecord, entry: QueueEntry) -> None:
        epi = EpidemicHeader(entry.message_id, entry.hop_budget).encode()
        total = entry.packet_total
        for index, payload in enumerate(entry.packets):
            dph = DataPacketHeader(entry.message_id, self.node_id, total, index).encode()
            self.transport.unicast(
                nb.address,
                PORT_DATA,
                b"".join((epi, dph, payload)),
                KIND_DATA,
                msg_dst=entry.destination,
            )

    def on_ack(self, ack: AckHeader, sender_addr: int, now: int) -> None:
        nb = self._touch_neighbor(ack.node_id, sender_addr, now)
        pipeline = self.pipelines.get(ack.node_id)
        if pipeline is None or pipeline.in_flight != ack.message_id:
            return  # stale or unknown ACK
        pipeline.in_flight = None
        self._advance_pipeline(nb, now)

    def _send_ack(self, nb: NeighborRecord, mid: MessageId) -> None:
        data = (
            MessageTypeHeader(MsgType.ACK, self.node_id).encode()
            + AckHeader(mid, self.node_id).encode()
        )
        self.transport.unicast(nb.address, PORT_CONTROL, data, KIND_ACK)

    # -- reception ------------------------------------------------------------

    def on_data_packet(
        self,
        epi: EpidemicHeader,
        dph: DataPacketHeader,
        payload: bytes,
        sender_addr: int,
        msg_dst: int | None,
        now: int,
    ) -> None:
        if epi.message_id != dph.message_id or msg_dst is None:
            self.trace.packet_event(
                KIND_DATA, PKT_MALFORMED, len(payload), sender_addr, self.node_id
            )
            return
        nb = self._touch_neighbor(dph.last_hop, sender_addr, now)
        rx = self.reception.get(nb.node_id)
        if rx is None:
            rx = ReceptionBuffer(nb.node_id)
            self.reception[nb.node_id] = rx
        if rx.message_id is not None and rx.message_id != dph.message_id:
            # One message per neighbor: a new id supersedes the partial one.
            self._drop_msg(now, rx.message_id, MSG_PARTIAL_RESET)
            rx.reset()
        if rx.message_id is None:
            rx.message_id = dph.message_id
            rx.packet_total = dph.packet_total
            rx.hop_count = epi.hop_count
            rx.msg_dst = msg_dst
        elif rx.packet_total != dph.packet_total:
            self.trace.packet_event(
                KIND_DATA, PKT_MALFORMED, len(payload), sender_addr, self.node_id
            )
            return
        rx.received[dph.packet_index] = payload
        if len(rx.received) == rx.packet_total:
            self._complete_message(nb, rx, now)

    def _complete_message(self, nb: NeighborRecord, rx: ReceptionBuffer, now: int) -> None:
        mid = rx.message_id
        assert mid is not None
        packets = tuple(rx.received[i] for i in range(rx.packet_total))
        destination = rx.msg_dst
        budget = rx.hop_count - 1 if rx.hop_count > 0 else 0
        rx.reset()
        self.trace.transfer_completed(
            TransferCompleted(now, mid, nb.node_id, self.node_id)
        )
        age = now - mid.timestamp_us
        if age > self._ttl_us:
            self._drop_msg(now, mid, MSG_ARRIVAL_EXPIRED)
        else:
            if destination == self.node_id and mid not in self.delivered_ids:
                self.delivered_ids.add(mid)
                self.trace.message_delivered(
                    MessageDelivered(
                        now, mid, self.node_id, age, self.config.hop_limit - budget
                    )
                )
            if budget == 0:
                if destination != self.node_id:
                    self._drop_msg(now, mid, MSG_HOP_EXHAUSTED)
            else:
                entry = QueueEntry(mid, destination, packets, len(packets[0]), budget)
                self._record_enqueue(self.buffer.enqueue(entry, now), mid, now)
        self._send_ack(nb, mid)

    # -- local message injection -----------------------------------------------

    def originate(self, entry: QueueEntry, now: int) -> None:
        """Store a locally generated message and record its creation."""
        self.trace.message_generated(
            MessageGenerated(
                now,
                entry.message_id,
                self.node_id,
                entry.destination,
                entry.byte_size,
                entry.packet_total,
            )
        )
        self._record_enqueue(self.buffer.enqueue(entry, now), entry.message_id, now)

    def wrap_raw_packet(
        self, payload: bytes, destination: int, now: int, source_node: int | None = None
    ) -> MessageId:
        """Wrap a headerless packet as a one-packet message and store it."""
        source = self.node_id if source_node is None else source_node
        mid = make_message_id(source, now)
        entry = QueueEntry(mid, destination, (payload,), len(payload), self.config.hop_limit)
        self.originate(entry, now)
        return mid

    # -- record helpers -----------------------------------------------------------

    def _record_enqueue(self, outcome: EnqueueOutcome, mid: MessageId, now: int) -> None:
        for dropped in outcome.expired:
            self._drop_msg(now, dropped, MSG_EXPIRED)
        for dropped in outcome.evicted:
            self._drop_msg(now, dropped, MSG_EVICTED)
        if not outcome.accepted:
            assert outcome.reason is not None
            self._drop_msg(now, mid, _REJECT_CAUSE[outcome.reason])

    def _drop_msg(self, now: int, mid: MessageId, cause: str) -> None:
        self.trace.message_dropped(MessageDropped(now, self.node_id, mid, cause))
