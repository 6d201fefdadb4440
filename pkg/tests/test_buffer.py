"""Message buffer: capacity, expiry, summaries, and disjoint sets."""

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from dtnsim.buffer import (
    REJECT_DUPLICATE,
    REJECT_EXPIRED,
    REJECT_TOO_LARGE,
    MessageBuffer,
    QueueEntry,
)
from dtnsim.wire import make_message_id

TTL_US = 1_000_000


def entry(source, gen_us, size=10, destination=99, hop_budget=5):
    mid = make_message_id(source, gen_us)
    return QueueEntry(mid, destination, (bytes(size),), size, hop_budget)


def multi_packet_entry(source, gen_us, payloads):
    mid = make_message_id(source, gen_us)
    return QueueEntry(mid, 99, tuple(payloads), len(payloads[0]), 5)


class TestEnqueue:
    def test_accept_into_empty(self):
        buf = MessageBuffer(100, TTL_US)
        outcome = buf.enqueue(entry(1, 0, size=10), now=0)
        assert outcome.accepted and not outcome.evicted
        assert len(buf) == 1 and buf.used_bytes == 10

    def test_duplicate_rejected_without_side_effects(self):
        buf = MessageBuffer(100, TTL_US)
        e = entry(1, 0)
        assert buf.enqueue(e, 0).accepted
        dup = buf.enqueue(entry(1, 0), 0)
        assert not dup.accepted and dup.reason == REJECT_DUPLICATE
        assert len(buf) == 1

    def test_oldest_evicted_first(self):
        buf = MessageBuffer(20, TTL_US)
        a, b = entry(1, 1, size=10), entry(2, 2, size=10)
        assert buf.enqueue(a, 10).accepted
        assert buf.enqueue(b, 10).accepted
        c = entry(3, 3, size=10)
        outcome = buf.enqueue(c, 10)
        assert outcome.accepted
        assert outcome.evicted == [a.message_id]
        assert buf.summary() == sorted([b.message_id, c.message_id])

    def test_expired_at_enqueue_rejected(self):
        buf = MessageBuffer(100, TTL_US)
        outcome = buf.enqueue(entry(1, 0), now=TTL_US + 1)
        assert not outcome.accepted and outcome.reason == REJECT_EXPIRED

    def test_larger_than_capacity_rejected(self):
        buf = MessageBuffer(5, TTL_US)
        outcome = buf.enqueue(entry(1, 0, size=6), 0)
        assert not outcome.accepted and outcome.reason == REJECT_TOO_LARGE

    def test_final_packet_may_be_smaller(self):
        e = multi_packet_entry(1, 0, [bytes(10), bytes(10), bytes(4)])
        assert e.byte_size == 24
        buf = MessageBuffer(24, TTL_US)
        assert buf.enqueue(e, 0).accepted
        assert buf.used_bytes == 24

    def test_eviction_matches_brute_force_oracle(self):
        # Oracle: evicting the shortest oldest-first prefix that frees
        # enough bytes, computed independently of the buffer.
        rng = random.Random(42)
        for _ in range(200):
            capacity = rng.randint(20, 60)
            buf = MessageBuffer(capacity, TTL_US)
            stored = []
            for i in range(rng.randint(0, 6)):
                e = entry(i + 1, rng.randint(0, 50), size=rng.randint(5, 20))
                if buf.enqueue(e, 60).accepted:
                    stored.append(e)
                    stored = [
                        s for s in stored if s.message_id in buf.summary()
                    ]
            new = entry(15, rng.randint(0, 50), size=rng.randint(5, 20))
            used = sum(s.byte_size for s in stored)
            expected = []
            free = capacity - used
            for s in sorted(stored, key=lambda s: (s.generated_at, s.message_id.raw)):
                if new.byte_size <= free:
                    break
                expected.append(s.message_id)
                free += s.byte_size
            outcome = buf.enqueue(new, 60)
            assert outcome.accepted
            assert outcome.evicted == expected


class TestDropExpired:
    def test_boundary_one_microsecond_past_ttl(self):
        buf = MessageBuffer(100, TTL_US)
        a = entry(1, 0)
        b = entry(2, TTL_US)
        buf.enqueue(a, 0)
        buf.enqueue(b, TTL_US)  # sweeps first; a's age is exactly ttl, kept
        assert len(buf) == 2
        dropped = buf.drop_expired(TTL_US + 1)  # a now one microsecond too old
        assert dropped == [a.message_id]
        assert buf.summary() == [b.message_id]

    def test_age_exactly_ttl_kept(self):
        buf = MessageBuffer(100, TTL_US)
        a = entry(1, 0)
        buf.enqueue(a, 0)
        assert buf.drop_expired(TTL_US) == []
        assert a.message_id in buf

    def test_empty_buffer(self):
        assert MessageBuffer(100, TTL_US).drop_expired(10) == []

    def test_all_expired(self):
        buf = MessageBuffer(100, TTL_US)
        for i in range(3):
            buf.enqueue(entry(i + 1, i), i)
        assert len(buf.drop_expired(TTL_US + 10)) == 3
        assert len(buf) == 0


class TestSummary:
    def test_sorted_by_raw_id(self):
        buf = MessageBuffer(100, TTL_US)
        hi, lo = entry(2, 5), entry(1, 9)
        buf.enqueue(hi, 9)
        buf.enqueue(lo, 9)
        assert buf.summary() == [lo.message_id, hi.message_id]

    def test_empty(self):
        assert MessageBuffer(100, TTL_US).summary() == []

    def test_excludes_expired(self):
        buf = MessageBuffer(100, TTL_US)
        e = entry(1, 0)
        buf.enqueue(e, 0)
        buf.drop_expired(TTL_US + 1)
        assert buf.summary() == []


class TestFindDisjoint:
    def test_difference_in_generation_order(self):
        buf = MessageBuffer(100, TTL_US)
        a, b, c = entry(1, 30), entry(2, 10), entry(3, 20)
        for e in (a, b, c):
            buf.enqueue(e, 30)
        assert buf.find_disjoint({b.message_id}) == [c.message_id, a.message_id]

    def test_subset_of_remote(self):
        buf = MessageBuffer(100, TTL_US)
        a = entry(1, 0)
        buf.enqueue(a, 0)
        assert buf.find_disjoint({a.message_id, entry(2, 1).message_id}) == []

    def test_against_brute_force_over_all_subsets(self):
        buf = MessageBuffer(1000, TTL_US)
        entries = [entry(i + 1, 10 * i) for i in range(8)]
        for e in entries:
            buf.enqueue(e, 100)
        ids = [e.message_id for e in entries]
        for r in range(len(ids) + 1):
            for remote in itertools.combinations(ids, r):
                expected = sorted(
                    set(ids) - set(remote), key=lambda m: (m.timestamp_us, m.raw)
                )
                assert buf.find_disjoint(set(remote)) == expected

    def test_disjoint_of_own_summary_is_empty(self):
        buf = MessageBuffer(100, TTL_US)
        for i in range(4):
            buf.enqueue(entry(i + 1, i), 5)
        assert buf.find_disjoint(buf.summary()) == []


ops = st.lists(
    st.tuples(
        st.sampled_from(["enqueue", "expire"]),
        st.integers(0, 7),  # source
        st.integers(0, 40),  # generation time
        st.integers(1, 30),  # size
    ),
    max_size=30,
)


@settings(max_examples=200)
@given(ops, st.integers(10, 60))
def test_capacity_never_exceeded(op_list, capacity):
    buf = MessageBuffer(capacity, 50)
    now = 0
    for op, source, gen, size in op_list:
        now = max(now, gen)
        if op == "enqueue":
            buf.enqueue(entry(source, gen, size=size), now)
        else:
            buf.drop_expired(now)
        assert buf.used_bytes <= capacity
        assert buf.used_bytes == sum(e.byte_size for e in buf.entries())


@settings(max_examples=200)
@given(ops, st.integers(10, 60))
def test_eviction_is_oldest_first(op_list, capacity):
    # No eviction may remove an entry generated later than one it keeps,
    # other than the incoming entry itself.
    buf = MessageBuffer(capacity, 1_000_000)
    for op, source, gen, size in op_list:
        if op != "enqueue":
            continue
        incoming = entry(source, gen, size=size)
        outcome = buf.enqueue(incoming, 100)
        if outcome.accepted and outcome.evicted:
            newest_evicted = max(m.timestamp_us for m in outcome.evicted)
            for e in buf.entries():
                if e.message_id != incoming.message_id:
                    assert e.generated_at >= newest_evicted


def test_constructor_validation():
    with pytest.raises(ValueError):
        MessageBuffer(0, TTL_US)
    with pytest.raises(ValueError):
        MessageBuffer(10, 0)
    with pytest.raises(ValueError):
        QueueEntry(make_message_id(1, 0), 99, (), 10, 5)
