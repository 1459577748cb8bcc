"""Deterministic fixture streams for equivalence and service tests."""

import random

from graphstage.events import EventKind, GraphEvent, edge_key, write_native_csv


def synthetic_50_events() -> str:
    """50 mixed events over ~20 s: growth, churn, removals."""
    rng = random.Random(1234)
    events = []
    ts = 100
    live_nodes: list = []
    live_edges: list = []
    seq = 0

    def emit(kind, subject):
        nonlocal seq
        events.append(GraphEvent(seq, ts, kind, subject))
        seq += 1

    while len(events) < 50:
        roll = rng.random()
        if roll < 0.35 or len(live_nodes) < 2:
            name = f"host{seq:02d}"
            emit(EventKind.NODE_ADD, name)
            live_nodes.append(name)
        elif roll < 0.75:
            a, b = rng.sample(live_nodes, 2)
            key = edge_key(a, b)
            if key not in live_edges:
                emit(EventKind.EDGE_ADD, key)
                live_edges.append(key)
        elif roll < 0.9 and live_edges:
            key = live_edges.pop(rng.randrange(len(live_edges)))
            emit(EventKind.EDGE_REMOVE, key)
        elif live_nodes:
            name = live_nodes.pop(rng.randrange(len(live_nodes)))
            live_edges = [e for e in live_edges if name not in e]
            emit(EventKind.NODE_REMOVE, name)
        ts += rng.randint(50, 700)
    return write_native_csv(events[:50])


def flow_fixture() -> str:
    """A dozen flow records with overlaps, zero durations, and an
    (ignored) self-loop, plus free extra columns."""
    rows = [
        "time_ms,duration_ms,source,destination,protocol",
        "0,4000,C1,C2,tcp",
        "500,1000,C2,C3,udp",
        "1500,3000,C1,C2,tcp",       # overlaps the first record: one edge
        "2200,0,C4,C5,icmp",         # zero duration: min lifetime applies
        "3000,2500,C3,C4,tcp",
        "4000,100,C9,C9,tcp",        # self-loop: skipped
        "5200,900,C2,C5,udp",
        "6000,1000,C1,C3,tcp",
        "7000,5000,C2,C3,tcp",
        "8100,300,C5,C6,udp",
        "9000,800,C1,C2,tcp",        # re-activation after expiry
        "9500,200,C6,C7,tcp",
    ]
    return "\n".join(rows) + "\n"


def all_ephemeral_fixture(windows: int = 10, t_i: int = 2000) -> str:
    """Every entity is added and removed inside one staging window, so
    every stage diff collapses to nothing but ephemeral pairs."""
    events = []
    seq = 0
    for k in range(windows):
        base = k * t_i
        x, z = f"x{k}", f"z{k}"
        for ts, kind, subject in [
            (base + 100, EventKind.NODE_ADD, x),
            (base + 200, EventKind.NODE_REMOVE, x),
            (base + 300, EventKind.NODE_ADD, z),
            (base + 400, EventKind.NODE_REMOVE, z),
        ]:
            events.append(GraphEvent(seq, ts, kind, subject))
            seq += 1
    return write_native_csv(events)
