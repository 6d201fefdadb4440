"""Simulation trace records and the per-run trace accumulator.

Message-level events are kept as individual records; per-packet outcomes
are folded into counters keyed by packet kind and by (src, dst) pair so
large runs stay cheap while conservation audits remain possible.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

from .wire import MessageId

# Packet kinds.
KIND_BEACON = "beacon"
KIND_REPLY = "reply"
KIND_REPLY_BACK = "reply_back"
KIND_ACK = "ack"
KIND_DATA = "data"

CONTROL_KINDS = (KIND_BEACON, KIND_REPLY, KIND_REPLY_BACK, KIND_ACK)

# Packet outcomes. A packet is submitted to its device queue, then either
# transmitted or dropped before service; a transmitted unicast packet is
# delivered, lost, or misses an out-of-range receiver.
PKT_SUBMITTED = "submitted"
PKT_TRANSMITTED = "transmitted"
PKT_DELIVERED = "delivered"
PKT_OVERFLOW = "overflow"
PKT_RESIDENCY = "residency"
PKT_OUT_OF_RANGE = "out_of_range"
PKT_LOSS = "loss"
PKT_MALFORMED = "malformed"
PKT_UNSENT_AT_END = "unsent_at_end"
PKT_IN_FLIGHT_AT_END = "in_flight_at_end"

PKT_DROP_OUTCOMES = (
    PKT_OVERFLOW,
    PKT_RESIDENCY,
    PKT_OUT_OF_RANGE,
    PKT_LOSS,
    PKT_MALFORMED,
    PKT_UNSENT_AT_END,
    PKT_IN_FLIGHT_AT_END,
)

# Message-level drop causes.
MSG_EXPIRED = "expired"
MSG_EVICTED = "evicted"
MSG_DUPLICATE = "duplicate"
MSG_TOO_LARGE = "too_large"
MSG_ARRIVAL_EXPIRED = "arrival_expired"
MSG_HOP_EXHAUSTED = "hop_exhausted"
MSG_PARTIAL_RESET = "partial_reset"
MSG_PARTIAL_DISCONNECT = "partial_disconnect"

MSG_DROP_CAUSES = (
    MSG_EXPIRED,
    MSG_EVICTED,
    MSG_DUPLICATE,
    MSG_TOO_LARGE,
    MSG_ARRIVAL_EXPIRED,
    MSG_HOP_EXHAUSTED,
    MSG_PARTIAL_RESET,
    MSG_PARTIAL_DISCONNECT,
)


@dataclass(frozen=True, slots=True)
class MessageGenerated:
    time_us: int
    message_id: MessageId
    source: int
    destination: int
    size_bytes: int
    packet_total: int


@dataclass(frozen=True, slots=True)
class MessageDelivered:
    time_us: int
    message_id: MessageId
    node: int
    latency_us: int
    hops: int


@dataclass(frozen=True, slots=True)
class TransferCompleted:
    """One complete hop-by-hop message reception, duplicates included."""

    time_us: int
    message_id: MessageId
    from_node: int
    to_node: int


@dataclass(frozen=True, slots=True)
class MessageDropped:
    time_us: int
    node: int
    message_id: MessageId
    cause: str


class RunTrace:
    """Accumulates one run's records and packet counters."""

    def __init__(self) -> None:
        self.generated: list[MessageGenerated] = []
        self.deliveries: list[MessageDelivered] = []
        self.transfers: list[TransferCompleted] = []
        self.message_drops: list[MessageDropped] = []
        # (kind, outcome) -> packet count / byte total
        self.packet_counts: Counter[tuple[str, str]] = Counter()
        self.packet_bytes: Counter[tuple[str, str]] = Counter()
        # (src, dst, kind, outcome) -> packet count; dst is None for
        # broadcast outcomes with no specific receiver.
        self.pair_counts: Counter[tuple[int, int | None, str, str]] = Counter()
        # Order-sensitive digest of the packet event sequence, so two
        # traces with equal aggregates but different histories differ.
        self._digest = hashlib.blake2b(digest_size=16)

    def message_generated(self, rec: MessageGenerated) -> None:
        self.generated.append(rec)

    def message_delivered(self, rec: MessageDelivered) -> None:
        self.deliveries.append(rec)

    def transfer_completed(self, rec: TransferCompleted) -> None:
        self.transfers.append(rec)

    def message_dropped(self, rec: MessageDropped) -> None:
        self.message_drops.append(rec)

    def packet_event(
        self, kind: str, outcome: str, size: int, src: int, dst: int | None
    ) -> None:
        self.packet_counts[(kind, outcome)] += 1
        self.packet_bytes[(kind, outcome)] += size
        self.pair_counts[(src, dst, kind, outcome)] += 1
        self._digest.update(
            f"{kind}|{outcome}|{size}|{src}|{dst};".encode()
        )

    def count(self, kind: str, outcome: str) -> int:
        return self.packet_counts[(kind, outcome)]

    def bytes_of(self, kind: str, outcome: str) -> int:
        return self.packet_bytes[(kind, outcome)]

    def dump(self) -> str:
        """Deterministic textual form of the whole trace, for replay checks."""
        lines = [repr(r) for r in self.generated]
        lines += [repr(r) for r in self.deliveries]
        lines += [repr(r) for r in self.transfers]
        lines += [repr(r) for r in self.message_drops]
        lines += [
            f"packets {kind}/{outcome}: n={n} bytes={self.packet_bytes[(kind, outcome)]}"
            for (kind, outcome), n in sorted(self.packet_counts.items())
        ]
        lines += [
            f"pair {src}->{dst} {kind}/{outcome}: {n}"
            for (src, dst, kind, outcome), n in sorted(
                self.pair_counts.items(), key=lambda kv: (str(kv[0]), kv[1])
            )
        ]
        lines.append(f"packet stream digest: {self._digest.hexdigest()}")
        return "\n".join(lines)
