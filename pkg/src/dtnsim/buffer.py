"""Per-node message store: complete messages only, byte-capacity bounded.

Expiry removes entries older than the configured ttl; when space runs out
the oldest-generated entries are purged first. Summaries and disjoint sets
drive the anti-entropy exchange.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .wire import NODE_ID_MAX, MessageId

REJECT_DUPLICATE = "duplicate"
REJECT_EXPIRED = "expired"
REJECT_TOO_LARGE = "too_large"


@dataclass(slots=True)
class QueueEntry:
    """One complete message: ordered packet payloads plus routing state."""

    message_id: MessageId
    destination: int
    packets: tuple[bytes, ...]
    packet_payload_size: int
    hop_budget: int
    byte_size: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.packets:
            raise ValueError("a message has at least one packet")
        if not 0 <= self.destination <= NODE_ID_MAX:
            raise ValueError(f"destination out of 16-bit range: {self.destination}")
        if self.packet_payload_size < 1:
            raise ValueError("packet_payload_size must be positive")
        if self.hop_budget < 0:
            raise ValueError("hop_budget must be non-negative")
        self.byte_size = sum(len(p) for p in self.packets)

    @property
    def packet_total(self) -> int:
        return len(self.packets)

    @property
    def generated_at(self) -> int:
        return self.message_id.timestamp_us


@dataclass(slots=True)
class EnqueueOutcome:
    """Result of an enqueue: acceptance plus what was removed to decide it."""

    accepted: bool
    reason: str | None = None
    expired: list[MessageId] = field(default_factory=list)
    evicted: list[MessageId] = field(default_factory=list)


def _age_order(entry: QueueEntry) -> tuple[int, int]:
    return (entry.generated_at, entry.message_id.raw)


class MessageBuffer:
    """Map of MessageId to QueueEntry with byte capacity and ttl enforcement."""

    def __init__(self, capacity_bytes: int, ttl_us: int) -> None:
        if capacity_bytes <= 0:
            raise ValueError("capacity_bytes must be positive")
        if ttl_us <= 0:
            raise ValueError("ttl_us must be positive")
        self.capacity_bytes = capacity_bytes
        self.ttl_us = ttl_us
        self._entries: dict[MessageId, QueueEntry] = {}
        self._used = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, message_id: MessageId) -> bool:
        return message_id in self._entries

    def get(self, message_id: MessageId) -> QueueEntry | None:
        return self._entries.get(message_id)

    def entries(self) -> Iterator[QueueEntry]:
        return iter(self._entries.values())

    @property
    def used_bytes(self) -> int:
        return self._used

    def drop_expired(self, now: int) -> list[MessageId]:
        """Remove every entry older than ttl; returns the dropped ids."""
        dropped = [
            mid
            for mid, entry in self._entries.items()
            if now - entry.generated_at > self.ttl_us
        ]
        for mid in dropped:
            self._remove(mid)
        return dropped

    def enqueue(self, entry: QueueEntry, now: int) -> EnqueueOutcome:
        """Store a complete message, expiring and purging as needed.

        Duplicates are rejected without side effects beyond the expiry
        sweep; an entry larger than the whole buffer is rejected outright.
        """
        expired = self.drop_expired(now)
        if entry.message_id in self._entries:
            return EnqueueOutcome(False, REJECT_DUPLICATE, expired)
        if now - entry.generated_at > self.ttl_us:
            return EnqueueOutcome(False, REJECT_EXPIRED, expired)
        if entry.byte_size > self.capacity_bytes:
            return EnqueueOutcome(False, REJECT_TOO_LARGE, expired)
        evicted = self._purge_for(entry.byte_size)
        self._entries[entry.message_id] = entry
        self._used += entry.byte_size
        return EnqueueOutcome(True, None, expired, evicted)

    def summary(self) -> list[MessageId]:
        """All stored ids, ascending by raw id."""
        return sorted(self._entries)

    def find_disjoint(self, remote: Iterable[MessageId]) -> list[MessageId]:
        """Stored ids absent from `remote`, oldest generation first."""
        remote_set = set(remote)
        mine = [e for e in self._entries.values() if e.message_id not in remote_set]
        mine.sort(key=_age_order)
        return [e.message_id for e in mine]

    def _purge_for(self, needed: int) -> list[MessageId]:
        free = self.capacity_bytes - self._used
        if needed <= free:
            return []
        victims = []
        for entry in sorted(self._entries.values(), key=_age_order):
            victims.append(entry.message_id)
            free += entry.byte_size
            if needed <= free:
                break
        for mid in victims:
            self._remove(mid)
        return victims

    def _remove(self, message_id: MessageId) -> None:
        entry = self._entries.pop(message_id)
        self._used -= entry.byte_size
