"""The staging -> layout -> animation pipeline and the wire stage schema.

One StagePipeline owns the engine, the graph state, and the layout; both
the offline composer and the live replay service drive it, which is what
makes their outputs byte-identical: stage messages depend only on the
event stream, the config, and the seed, never on wall-clock pacing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .animation import StageScript, LagRecord, build_script, stage_lag_records
from .events import ApplyLog, GraphEvent, GraphState, apply_event
from .layout import LayoutParams, LayoutState, movements, place_new, refine
from .staging import (Bin, StageDiff, StageTiming, StagingConfig, StagingEngine,
                      Strategy, compose_stage, stage_timing)

WIRE_VERSION = 1


@dataclass
class StageResult:
    """Everything one stage produced, ready to broadcast or dump."""

    stage_bin: Bin
    diff: StageDiff
    timing: StageTiming
    script: StageScript
    lag_records: list[LagRecord]
    message: dict

    @property
    def message_line(self) -> str:
        return encode_message(self.message)


def encode_message(message: dict) -> str:
    """Canonical wire encoding: compact JSON, insertion-ordered fields."""
    return json.dumps(message, separators=(",", ":"), ensure_ascii=False)


def _round(v: float) -> float:
    r = round(v, 6)
    return 0.0 if r == 0 else r


def _entity_wire(entity) -> object:
    return list(entity) if isinstance(entity, tuple) else entity


def _entity_sort_key(entity) -> tuple:
    if isinstance(entity, tuple):
        return (1, entity[0], entity[1])
    return (0, entity, "")


def encode_stage_message(stage_id: int, stage_bin: Bin, diff: StageDiff,
                         timing: StageTiming, script: StageScript,
                         lag_records: list[LagRecord]) -> dict:
    """The `stage` wire message; field names are part of the protocol.

    moves carries displaced survivors plus one zero-displacement entry
    (from == to) per added node: that is how a client with no layout of
    its own learns where additions appear.
    """
    move_entries = {m.node: (m.source, m.target) for m in script.moves}
    for node in diff.node_additions:
        pos = script.positions_after[node]
        move_entries[node] = (pos, pos)
    return {
        "type": "stage",
        "stage_id": stage_id,
        "cause": stage_bin.trigger_cause.value,
        "timing": timing.to_dict(),
        "deletions": [_entity_wire(e) for e in
                      sorted(diff.node_deletions | diff.edge_deletions, key=_entity_sort_key)],
        "additions": [_entity_wire(e) for e in
                      sorted(diff.node_additions | diff.edge_additions, key=_entity_sort_key)],
        "moves": [{"id": node,
                   "from": [_round(src[0]), _round(src[1])],
                   "to": [_round(dst[0]), _round(dst[1])]}
                  for node, (src, dst) in sorted(move_entries.items())],
        "ephemeral": [{"entity": _entity_wire(p.entity),
                       "added_seq": p.added.seq, "removed_seq": p.removed.seq}
                      for p in diff.ephemeral],
        "lag": [{"seq": r.seq, "event_ms": r.timestamp, "depicted_ms": r.depiction_start}
                for r in lag_records if not r.ephemeral],
    }


class StagePipeline:
    """Feeds events, fires triggers, and turns each bin into a StageResult."""

    def __init__(self, config: StagingConfig, layout_params: LayoutParams | None = None,
                 seed: int = 42):
        self.engine = StagingEngine(config)
        self.layout_params = layout_params or LayoutParams()
        self.graph = GraphState()
        self.layout = LayoutState(rng_seed=seed)
        self.seed = seed
        self.stage_count = 0
        self.apply_log = ApplyLog()
        self.history: list[StageResult] = []
        self.keep_history = True

    @property
    def config(self) -> StagingConfig:
        return self.engine.config

    def set_config(self, config: StagingConfig):
        self.engine.update_config(config)

    def feed(self, event: GraphEvent):
        self.engine.feed(event)

    def poll(self, now: int) -> StageResult | None:
        emitted = self.engine.poll(now)
        if emitted is None:
            return None
        return self._process(emitted)

    def drain(self, end_of_stream_ts: int, max_stages: int = 1_000_000) -> list[StageResult]:
        """Flush every pending event into stages at end of stream.

        Time and hybrid streams drain through their normal window
        boundaries; an event-based remainder below the threshold is
        force-flushed as one final bin.
        """
        results = []
        now = max(end_of_stream_ts, self.engine.busy_until)
        while self.engine.pending_count > 0:
            if len(results) >= max_stages:
                raise RuntimeError("drain did not terminate")
            result = self.poll(now)
            if result is not None:
                results.append(result)
                now = max(now, self.engine.busy_until)
                continue
            if self.engine.config.strategy is Strategy.EVENT_BASED:
                emitted = self.engine.force_flush(now)
                if emitted is not None:
                    results.append(self._process(emitted))
                continue
            now = max(now, self.engine.window_start + self.engine.config.t_i,
                      self.engine.busy_until)
        return results

    def _process(self, emitted: Bin) -> StageResult:
        diff = compose_stage(emitted, self.graph)
        timing = stage_timing(diff, self.engine.config)
        self.engine.confirm_stage(timing)

        positions_before = dict(self.layout.positions)
        pre_edges = frozenset(self.graph.edges)

        for ev in emitted.events:
            apply_event(self.graph, ev, log=self.apply_log)

        for node in diff.node_deletions:
            self.layout.positions.pop(node, None)
            self.layout.energy.pop(node, None)
        place_new(self.layout, set(diff.node_additions), self.graph,
                  seed=self.seed, params=self.layout_params)
        refine(self.layout, self.graph, self.layout_params)

        before_state = LayoutState(positions=positions_before, rng_seed=self.seed)
        survivors = set(positions_before) - set(diff.node_deletions)
        moves = movements(before_state, self.layout, survivors)

        script = build_script(
            diff, moves, timing, start_time=emitted.trigger_time,
            positions_before=positions_before, positions_after=dict(self.layout.positions),
            pre_edges=pre_edges, stage_id=self.stage_count,
        )
        lag_records = stage_lag_records(emitted, diff, script)
        message = encode_stage_message(self.stage_count, emitted, diff, timing,
                                       script, lag_records)
        result = StageResult(stage_bin=emitted, diff=diff, timing=timing,
                             script=script, lag_records=lag_records, message=message)
        self.stage_count += 1
        if self.keep_history:
            self.history.append(result)
        return result

    def lag_history(self):
        """(strategy, bin, diff, script) tuples for lag_report()."""
        return [(self.config.strategy.value, r.stage_bin, r.diff, r.script)
                for r in self.history]


def compose_stream(events: list[GraphEvent], config: StagingConfig,
                   layout_params: LayoutParams | None = None, seed: int = 42,
                   keep_history: bool = False) -> list[StageResult]:
    """Offline run: push a whole recorded stream through the pipeline.

    Produces exactly the stage sequence a live replay of the same file
    would broadcast (at any speed), including the end-of-stream drain.
    """
    pipeline = StagePipeline(config, layout_params=layout_params, seed=seed)
    pipeline.keep_history = keep_history
    results: list[StageResult] = []
    for ev in events:
        pipeline.feed(ev)
        while True:
            result = pipeline.poll(ev.timestamp)
            if result is None:
                break
            results.append(result)
    if events:
        results.extend(pipeline.drain(events[-1].timestamp))
    return results
