"""The three staging strategies side by side on one bursty stream.

Shows: time-based bins fire every window regardless of load, event-based
bins wait for N events (watch the first trigger), hybrid takes whichever
threshold crosses first and shrinks stages that have nothing to delete
or add.
"""

from graphstage import (EventKind, GraphEvent, StagingConfig, StagingEngine, Strategy,
                        compose_stage, stage_timing)
from graphstage.events import GraphState, apply_event

# a burst at the start, then a trickle
ARRIVALS = [0, 50, 120, 180, 400, 460, 3100, 6200, 9800, 9900]
EVENTS = [GraphEvent(i, ts, EventKind.NODE_ADD, f"n{i}") for i, ts in enumerate(ARRIVALS)]

for strategy in Strategy:
    config = StagingConfig(strategy=strategy)
    engine = StagingEngine(config)
    graph = GraphState()
    print(f"\n=== {strategy.value} staging (t_i={config.t_i} ms, N={config.n_events}) ===")
    rows = []

    def pump(now):
        while (emitted := engine.poll(now)) is not None:
            diff = compose_stage(emitted, graph)
            timing = stage_timing(diff, config)
            engine.confirm_stage(timing)
            for ev in emitted.events:
                apply_event(graph, ev)
            rows.append((emitted.trigger_time, emitted.trigger_cause.value,
                         len(emitted.events), timing.total_ms))

    for ev in EVENTS:
        engine.feed(ev)
        pump(ev.timestamp)
    pump(12_000)

    print(f"  {'trigger':>8}  {'cause':<17} {'events':>6}  {'T_an':>5}")
    for trigger, cause, count, total in rows:
        print(f"  {trigger:>8}  {cause:<17} {count:>6}  {total:>5}")
    if engine.pending_count:
        print(f"  ({engine.pending_count} events still pending: below the threshold)")
