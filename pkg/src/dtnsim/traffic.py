"""Application-level message generation and packet segmentation.

A message of size_bytes is cut into ceil(size / payload) packets; the
payload content is a fixed repeating byte pattern positioned by offset,
so reassembly is byte-checkable. Creation times are quantized to distinct
microseconds per source node, which keeps every message id unique.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .buffer import QueueEntry
from .wire import MessageId, make_message_id

_PATTERN = bytes(range(256))


class IdCollisionError(ValueError):
    """Two generations share a (source, creation microsecond) pair."""


@dataclass(frozen=True, slots=True)
class MessageSpec:
    source: int
    destination: int
    size_bytes: int
    packet_payload: int
    creation_time_us: int

    def __post_init__(self) -> None:
        if self.size_bytes < 1:
            raise ValueError("size_bytes must be at least 1")
        if self.packet_payload < 1:
            raise ValueError("packet_payload must be at least 1")
        if self.source == self.destination:
            raise ValueError("source and destination must differ")


def message_payloads(size_bytes: int, packet_payload: int) -> tuple[bytes, ...]:
    """Segment the pattern stream for one message into packet payloads."""
    stream = (_PATTERN * (size_bytes // 256 + 2))[:size_bytes]
    return tuple(
        stream[offset : offset + packet_payload]
        for offset in range(0, size_bytes, packet_payload)
    )


def generate_message(
    spec: MessageSpec, hop_limit: int, seen_ids: set[MessageId] | None = None
) -> QueueEntry:
    """Build the queue entry for one message, guarding id uniqueness."""
    mid = make_message_id(spec.source, spec.creation_time_us)
    if seen_ids is not None:
        if mid in seen_ids:
            raise IdCollisionError(f"duplicate message id {mid}")
        seen_ids.add(mid)
    packets = message_payloads(spec.size_bytes, spec.packet_payload)
    return QueueEntry(mid, spec.destination, packets, spec.packet_payload, hop_limit)


def build_schedule(
    node_count: int,
    message_count: int,
    size_bytes: int,
    packet_payload: int,
    window_us: tuple[int, int],
    rng: random.Random,
) -> list[MessageSpec]:
    """Draw uniform (source, destination) pairs and creation times.

    Deterministic for a given rng state; creation times are re-drawn (or
    nudged) until distinct per source.
    """
    if message_count == 0:
        return []
    if node_count < 2:
        raise ValueError("need at least two nodes for traffic")
    start, end = window_us
    if end < start:
        raise ValueError("traffic window end precedes start")
    used: dict[int, set[int]] = {}
    specs = []
    for _ in range(message_count):
        source = rng.randrange(node_count)
        destination = rng.randrange(node_count - 1)
        if destination >= source:
            destination += 1
        taken = used.setdefault(source, set())
        if len(taken) > end - start:
            raise IdCollisionError(
                f"window too small for distinct creation times at node {source}"
            )
        t = rng.randint(start, end)
        while t in taken:  # nudge to the next free microsecond
            t = t + 1 if t < end else start
        taken.add(t)
        specs.append(MessageSpec(source, destination, size_bytes, packet_payload, t))
    specs.sort(key=lambda s: (s.creation_time_us, s.source))
    return specs
