"""ns-2 mobility traces: parsing, piecewise-linear trajectories, generation.

Accepted lines:

    $node_(3) set X_ 12.5
    $node_(3) set Y_ 40.0
    $node_(3) set Z_ 0.0                       # parsed, ignored
    $ns_ at 10.0 "$node_(3) setdest 50.0 40.0 2.5"

Position between waypoints is linear at the given speed and clamps at the
destination. Node indices must be contiguous from 0 and every node needs
an initial X_ and Y_.
"""

from __future__ import annotations

import bisect
import math
import re
import random
from dataclasses import dataclass


class TraceParseError(ValueError):
    """Malformed mobility trace; the message carries the line number."""


_INIT_RE = re.compile(
    r"^\$node_\((\d+)\)\s+set\s+([XYZ])_\s+(\S+)$"
)
_WAYPOINT_RE = re.compile(
    r"^\$ns_\s+at\s+(\S+)\s+\"\$node_\((\d+)\)\s+setdest\s+(\S+)\s+(\S+)\s+(\S+)\"$"
)


@dataclass(slots=True)
class _Segment:
    t0: float
    x0: float
    y0: float
    t1: float
    x1: float
    y1: float


class Trajectory:
    """A single node's position over time."""

    def __init__(self, x: float, y: float) -> None:
        self.initial = (x, y)
        self._segments: list[_Segment] = []
        self._starts: list[float] = []

    def add_waypoint(self, t: float, x: float, y: float, speed: float) -> None:
        """Start moving toward (x, y) at time t with the given speed."""
        x0, y0 = self.position_at(t)
        if self._segments and t < self._segments[-1].t1:
            # A new command mid-flight truncates the current segment.
            seg = self._segments[-1]
            seg.t1, seg.x1, seg.y1 = t, x0, y0
        dist = math.hypot(x - x0, y - y0)
        if speed <= 0.0 or dist == 0.0:
            return
        arrival = t + dist / speed
        self._segments.append(_Segment(t, x0, y0, arrival, x, y))
        self._starts.append(t)

    def position_at(self, t: float) -> tuple[float, float]:
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            return self.initial
        seg = self._segments[i]
        if t >= seg.t1:
            return (seg.x1, seg.y1)
        frac = (t - seg.t0) / (seg.t1 - seg.t0)
        return (seg.x0 + (seg.x1 - seg.x0) * frac, seg.y0 + (seg.y1 - seg.y0) * frac)


def parse_ns2_trace(text: str) -> list[Trajectory]:
    """Parse trace text into trajectories indexed by node id."""
    initials: dict[int, dict[str, float]] = {}
    waypoints: list[tuple[float, int, float, float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _INIT_RE.match(line)
        if m:
            node, axis, value = int(m.group(1)), m.group(2), m.group(3)
            try:
                initials.setdefault(node, {})[axis] = float(value)
            except ValueError:
                raise TraceParseError(
                    f"line {lineno}: bad coordinate {value!r}"
                ) from None
            continue
        m = _WAYPOINT_RE.match(line)
        if m:
            try:
                t = float(m.group(1))
                node = int(m.group(2))
                x, y, speed = (float(m.group(k)) for k in (3, 4, 5))
            except ValueError:
                raise TraceParseError(f"line {lineno}: bad waypoint numbers") from None
            if t < 0 or speed < 0:
                raise TraceParseError(
                    f"line {lineno}: negative time or speed in waypoint"
                )
            waypoints.append((t, node, x, y, speed))
            continue
        raise TraceParseError(f"line {lineno}: unrecognized trace line {line!r}")

    if not initials:
        raise TraceParseError("trace defines no nodes")
    count = max(initials) + 1
    for node in range(count):
        axes = initials.get(node)
        if axes is None:
            raise TraceParseError(f"node index gap: node {node} has no position")
        if "X" not in axes or "Y" not in axes:
            raise TraceParseError(f"node {node} is missing an initial X_ or Y_")

    trajectories = [
        Trajectory(initials[node]["X"], initials[node]["Y"]) for node in range(count)
    ]
    waypoints.sort(key=lambda w: (w[0], w[1]))
    for t, node, x, y, speed in waypoints:
        if node >= count:
            raise TraceParseError(
                f"waypoint references node {node}, but only {count} nodes have positions"
            )
        trajectories[node].add_waypoint(t, x, y, speed)
    return trajectories


def generate_random_waypoint_trace(
    n_nodes: int,
    width: float,
    height: float,
    speed_min: float,
    speed_max: float,
    duration: float,
    seed: int | str,
) -> str:
    """Emit ns-2 trace text for a random-waypoint scenario (no pauses)."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be positive")
    if not 0 < speed_min <= speed_max:
        raise ValueError("need 0 < speed_min <= speed_max")
    rng = random.Random(f"rwp:{seed}")
    lines = []
    walks: list[list[str]] = []
    for node in range(n_nodes):
        x, y = rng.uniform(0, width), rng.uniform(0, height)
        lines.append(f"$node_({node}) set X_ {x:.4f}")
        lines.append(f"$node_({node}) set Y_ {y:.4f}")
        t = 0.0
        node_lines = []
        while t < duration:
            nx, ny = rng.uniform(0, width), rng.uniform(0, height)
            speed = rng.uniform(speed_min, speed_max)
            node_lines.append(
                f'$ns_ at {t:.4f} "$node_({node}) setdest {nx:.4f} {ny:.4f} {speed:.4f}"'
            )
            t += math.hypot(nx - x, ny - y) / speed
            x, y = nx, ny
        walks.append(node_lines)
    for node_lines in walks:
        lines.extend(node_lines)
    return "\n".join(lines) + "\n"
