import random

import pytest

from graphstage.events import EventKind, GraphEvent, GraphState, apply_event, edge_key
from graphstage.staging import StagingConfig, StagingEngine, Strategy, compose_stage, stage_timing


def make_events(rows):
    """rows: (timestamp, kind, subject) tuples -> GraphEvents with seq order."""
    events = []
    for i, (ts, kind, subject) in enumerate(rows):
        events.append(GraphEvent(seq=i, timestamp=ts, kind=kind, subject=subject))
    return events


def random_stream(rng: random.Random, max_events: int = 500, max_gap: int = 1200,
                  first_within: int | None = None):
    """A plausible random event stream: non-decreasing timestamps, a churn
    of node/edge adds and removes over a small id pool."""
    count = rng.randint(1, max_events)
    pool = [f"v{i}" for i in range(rng.randint(3, 14))]
    events = []
    ts = rng.randint(0, first_within - 1) if first_within else rng.randint(0, 3000)
    live_nodes: set = set()
    live_edges: set = set()
    for i in range(count):
        roll = rng.random()
        if roll < 0.3 or not live_nodes:
            kind, subject = EventKind.NODE_ADD, rng.choice(pool)
        elif roll < 0.45:
            kind, subject = EventKind.NODE_REMOVE, rng.choice(sorted(live_nodes))
        elif roll < 0.8 and len(live_nodes) >= 2:
            a, b = rng.sample(sorted(live_nodes), 2)
            kind, subject = EventKind.EDGE_ADD, edge_key(a, b)
        elif live_edges:
            kind, subject = EventKind.EDGE_REMOVE, rng.choice(sorted(live_edges))
        else:
            kind, subject = EventKind.NODE_ADD, rng.choice(pool)
        events.append(GraphEvent(seq=i, timestamp=ts, kind=kind, subject=subject))
        if kind is EventKind.NODE_ADD:
            live_nodes.add(subject)
        elif kind is EventKind.NODE_REMOVE:
            live_nodes.discard(subject)
            live_edges = {e for e in live_edges if subject not in e}
        elif kind is EventKind.EDGE_ADD:
            live_nodes.update(subject)
            live_edges.add(subject)
        else:
            live_edges.discard(subject)
        if rng.random() < 0.7:
            ts += rng.randint(0, max_gap)
    return events


def run_trigger_pipeline(config: StagingConfig, events, flush: bool = True):
    """Drive the engine the way the stage pipeline does, minus layout and
    animation: compose each bin against a running graph, confirm its
    timing, optionally drain at end of stream. Returns (bins, diffs)."""
    engine = StagingEngine(config)
    graph = GraphState()
    bins, diffs = [], []

    def handle(emitted):
        diff = compose_stage(emitted, graph)
        engine.confirm_stage(stage_timing(diff, engine.config))
        for ev in emitted.events:
            apply_event(graph, ev)
        bins.append(emitted)
        diffs.append(diff)

    for ev in events:
        engine.feed(ev)
        while (emitted := engine.poll(ev.timestamp)) is not None:
            handle(emitted)
    if flush and events:
        now = max(events[-1].timestamp, engine.busy_until)
        guard = 0
        while engine.pending_count > 0:
            guard += 1
            assert guard < 200_000, "flush did not terminate"
            emitted = engine.poll(now)
            if emitted is not None:
                handle(emitted)
                now = max(now, engine.busy_until)
                continue
            if config.strategy is Strategy.EVENT_BASED:
                emitted = engine.force_flush(now)
                if emitted is not None:
                    handle(emitted)
                continue
            now = max(now, engine.window_start + engine.config.t_i, engine.busy_until)
    return bins, diffs


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
