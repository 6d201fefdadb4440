"""Wires a scenario into a simulation run and produces reports.

Setup order matters for same-microsecond determinism: traffic events are
scheduled before protocol timers, so a message generated at the instant a
beacon fires is in the buffer before the exchange starts.
"""

from __future__ import annotations

import random

from .metrics import RunReport, compute
from .netsim import EVENT_TRAFFIC, NodeTransport, RadioNetwork, Simulator
from .protocol import EpidemicNode
from .records import RunTrace
from .scenario import Scenario
from .traffic import build_schedule, generate_message


def build_run(
    scenario: Scenario, seed: int
) -> tuple[Simulator, RadioNetwork, list[EpidemicNode], RunTrace]:
    trajectories = scenario.load_trajectories()
    node_count = len(trajectories)
    sim = Simulator()
    trace = RunTrace()
    network = RadioNetwork(
        sim,
        scenario.link,
        trajectories,
        scenario.queue_capacity,
        int(round(scenario.queue_residency_s * 1_000_000)),
        random.Random(f"{seed}:loss"),
        trace,
    )
    nodes = []
    for i in range(node_count):
        node = EpidemicNode(
            node_id=i,
            address=i,
            config=scenario.protocol,
            transport=NodeTransport(network, i),
            trace=trace,
            beacon_rng=random.Random(f"{seed}:beacon:{i}"),
        )
        network.attach(i, node.handle_packet)
        nodes.append(node)

    traffic = scenario.traffic
    if traffic.message_count:
        window = (
            int(round(traffic.start_s * 1_000_000)),
            int(round(traffic.end_s * 1_000_000)),
        )
        specs = build_schedule(
            node_count,
            traffic.message_count,
            traffic.message_size,
            traffic.packet_payload,
            window,
            random.Random(f"{seed}:traffic"),
        )
        seen: set = set()
        for spec in specs:
            entry = generate_message(spec, scenario.protocol.hop_limit, seen)
            sim.schedule(
                spec.creation_time_us,
                EVENT_TRAFFIC,
                lambda node=nodes[spec.source], e=entry, t=spec.creation_time_us: (
                    node.originate(e, t)
                ),
            )
    for node in nodes:
        node.start(0)
    return sim, network, nodes, trace


def run_once(scenario: Scenario, seed: int) -> tuple[RunReport, RunTrace]:
    sim, network, _, trace = build_run(scenario, seed)
    sim.run(scenario.duration_us)
    network.finalize()
    return compute(trace, seed), trace


def run_seeds(scenario: Scenario, seeds: tuple[int, ...] | None = None) -> list[RunReport]:
    return [run_once(scenario, seed)[0] for seed in (seeds or scenario.seeds)]
