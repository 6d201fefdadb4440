"""Run metrics: delivery ratio, latency, hops, replication and byte overheads.

A delivery is the first arrival of a message at its destination;
replication overhead counts completed hop-by-hop transfers beyond those
deliveries, per delivery. Byte fractions are taken over all transmitted
bytes. Reports serialize to CSV, with a seed-aggregate companion carrying
means and 95% confidence intervals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from scipy import stats

from .records import (
    CONTROL_KINDS,
    KIND_DATA,
    MSG_DROP_CAUSES,
    PKT_DROP_OUTCOMES,
    PKT_TRANSMITTED,
    RunTrace,
)
from .wire import DATA_HEADERS_SIZE

METRIC_FIELDS = (
    "mdr",
    "avg_latency_s",
    "avg_hop_count",
    "replication_overhead",
    "control_byte_fraction",
    "header_byte_fraction",
)


@dataclass(slots=True)
class RunReport:
    seed: int
    generated: int
    delivered: int
    transfers: int
    mdr: float | None
    avg_latency_s: float | None
    avg_hop_count: float | None
    replication_overhead: float | None
    control_byte_fraction: float
    header_byte_fraction: float
    bytes_transmitted: int
    data_packets_sent: int
    control_packets_sent: int
    drops: dict[str, int] = field(default_factory=dict)


def compute(trace: RunTrace, seed: int = 0) -> RunReport:
    """Fold one run's trace into a report."""
    generated = len(trace.generated)

    # First arrival per message; the protocol records one delivery per
    # message already, so this dedup is defensive.
    first: dict = {}
    for rec in trace.deliveries:
        prev = first.get(rec.message_id)
        if prev is None or rec.time_us < prev.time_us:
            first[rec.message_id] = rec
    deliveries = list(first.values())
    delivered = len(deliveries)
    transfers = len(trace.transfers)

    mdr = delivered / generated if generated else None
    avg_latency_s = (
        sum(d.latency_us for d in deliveries) / delivered / 1_000_000
        if delivered
        else None
    )
    avg_hop_count = (
        sum(d.hops for d in deliveries) / delivered if delivered else None
    )
    replication_overhead = (
        (transfers - delivered) / delivered if delivered else None
    )

    control_bytes = sum(trace.bytes_of(kind, PKT_TRANSMITTED) for kind in CONTROL_KINDS)
    control_packets = sum(trace.count(kind, PKT_TRANSMITTED) for kind in CONTROL_KINDS)
    data_bytes = trace.bytes_of(KIND_DATA, PKT_TRANSMITTED)
    data_packets = trace.count(KIND_DATA, PKT_TRANSMITTED)
    total_bytes = control_bytes + data_bytes
    control_byte_fraction = control_bytes / total_bytes if total_bytes else 0.0
    header_byte_fraction = (
        data_packets * DATA_HEADERS_SIZE / total_bytes if total_bytes else 0.0
    )

    drops: dict[str, int] = {}
    for cause in MSG_DROP_CAUSES:
        drops[f"msg_{cause}"] = 0
    for rec in trace.message_drops:
        drops[f"msg_{rec.cause}"] += 1
    for outcome in PKT_DROP_OUTCOMES:
        drops[f"pkt_{outcome}"] = sum(
            n for (kind, out), n in trace.packet_counts.items() if out == outcome
        )

    return RunReport(
        seed=seed,
        generated=generated,
        delivered=delivered,
        transfers=transfers,
        mdr=mdr,
        avg_latency_s=avg_latency_s,
        avg_hop_count=avg_hop_count,
        replication_overhead=replication_overhead,
        control_byte_fraction=control_byte_fraction,
        header_byte_fraction=header_byte_fraction,
        bytes_transmitted=total_bytes,
        data_packets_sent=data_packets,
        control_packets_sent=control_packets,
        drops=drops,
    )


def mean_ci95(values: list[float]) -> tuple[float, float]:
    """Sample mean and Student-t 95% confidence half-width."""
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    half = float(stats.t.ppf(0.975, n - 1)) * math.sqrt(var / n)
    return mean, half


def aggregate(reports: list[RunReport]) -> dict[str, tuple[float, float] | None]:
    """Per-metric mean and CI across seeds; None when no run defines it."""
    out: dict[str, tuple[float, float] | None] = {}
    for name in METRIC_FIELDS:
        values = [
            v for r in reports if (v := getattr(r, name)) is not None
        ]
        out[name] = mean_ci95(values) if values else None
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


DROP_COLUMNS = tuple(f"msg_{c}" for c in MSG_DROP_CAUSES) + tuple(
    f"pkt_{o}" for o in PKT_DROP_OUTCOMES
)

RUN_COLUMNS = (
    "seed",
    "generated",
    "delivered",
    "transfers",
    *METRIC_FIELDS,
    "bytes_transmitted",
    "data_packets_sent",
    "control_packets_sent",
    *DROP_COLUMNS,
)


def run_row(report: RunReport) -> dict[str, str]:
    row = {
        name: _fmt(getattr(report, name))
        for name in RUN_COLUMNS
        if name not in DROP_COLUMNS
    }
    for col in DROP_COLUMNS:
        row[col] = str(report.drops.get(col, 0))
    return row


AGGREGATE_COLUMNS = ("runs",) + tuple(
    f"{name}_{suffix}" for name in METRIC_FIELDS for suffix in ("mean", "ci95")
)


def aggregate_row(reports: list[RunReport]) -> dict[str, str]:
    agg = aggregate(reports)
    row = {"runs": str(len(reports))}
    for name in METRIC_FIELDS:
        pair = agg[name]
        row[f"{name}_mean"] = _fmt(pair[0]) if pair else ""
        row[f"{name}_ci95"] = _fmt(pair[1]) if pair else ""
    return row


def write_csv(path: Path, columns: tuple[str, ...], rows: list[dict[str, str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)
