"""Event binning: trigger state machine, net stage diffs, stage timings.

A StagingEngine accumulates events via feed() and emits Bins from poll()
according to the configured strategy:

* time-based  -- a bin fires at every window boundary that has pending
  events; empty windows advance silently.
* event-based -- a bin of exactly N oldest events fires as soon as N are
  pending and the previous stage's animation has completed.
* hybrid      -- whichever of the two thresholds is crossed first, also
  gated on the previous animation; a boundary with nothing pending fires
  an empty convergence tick (movement-only stage).

Trigger instants are computed logically from timestamps, not from the
wall-clock instant poll() happens to be called at, so the emitted bin
sequence is a deterministic function of the event stream and the config.
After every emitted bin the caller must call confirm_stage() with the
stage's timing so the engine knows when the animation ends.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .events import Entity, EventKind, GraphEvent, GraphState

CHECKPOINT_VERSION = 1


class Strategy(str, Enum):
    TIME_BASED = "time"
    EVENT_BASED = "event"
    HYBRID = "hybrid"


class TriggerCause(str, Enum):
    TIME_THRESHOLD = "time_threshold"
    EVENT_THRESHOLD = "event_threshold"
    CONVERGENCE_TICK = "convergence_tick"


@dataclass(frozen=True, slots=True)
class StagingConfig:
    """Strategy selector plus every timing/count threshold.

    Defaults are the study configuration: sub-stages 450/600/450/500 ms
    (2 s total), 2 s time window, event threshold 5 (3 for monitoring).
    """

    strategy: Strategy = Strategy.HYBRID
    t_i: int = 2000
    n_events: int = 5
    t_d: int = 450
    t_m: int = 600
    t_a: int = 450
    t_p: int = 500

    def __post_init__(self):
        for name in ("t_i", "t_d", "t_m", "t_a", "t_p"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.n_events < 1:
            raise ValueError(f"n_events must be >= 1, got {self.n_events}")
        if self.strategy in (Strategy.TIME_BASED, Strategy.HYBRID):
            # A window must fit one full animation, else backlog gating
            # would extend windows forever.
            if self.t_i < self.total_animation_ms:
                raise ValueError(
                    f"t_i={self.t_i} is shorter than a full animation "
                    f"({self.total_animation_ms} ms) for strategy {self.strategy.value}")

    @property
    def total_animation_ms(self) -> int:
        return self.t_d + self.t_m + self.t_a + self.t_p

    @classmethod
    def monitoring(cls, strategy: Strategy = Strategy.HYBRID) -> "StagingConfig":
        """Monitoring preset: event threshold 3 instead of 5."""
        return cls(strategy=strategy, n_events=3)

    def to_dict(self) -> dict:
        return {"strategy": self.strategy.value, "t_i": self.t_i, "n_events": self.n_events,
                "t_d": self.t_d, "t_m": self.t_m, "t_a": self.t_a, "t_p": self.t_p}

    @classmethod
    def from_dict(cls, d: dict) -> "StagingConfig":
        return cls(strategy=Strategy(d["strategy"]), t_i=int(d["t_i"]),
                   n_events=int(d["n_events"]), t_d=int(d["t_d"]), t_m=int(d["t_m"]),
                   t_a=int(d["t_a"]), t_p=int(d["t_p"]))


@dataclass(frozen=True, slots=True)
class Bin:
    """One emitted stage's worth of raw events."""

    window_start: int
    trigger_time: int
    trigger_cause: TriggerCause
    events: tuple[GraphEvent, ...]

    def __post_init__(self):
        for ev in self.events:
            if not self.window_start <= ev.timestamp <= self.trigger_time:
                raise ValueError(
                    f"event seq={ev.seq} at {ev.timestamp} outside bin window "
                    f"[{self.window_start}, {self.trigger_time}]")
        if self.trigger_cause is TriggerCause.CONVERGENCE_TICK and self.events:
            raise ValueError("convergence tick bins must be empty")


@dataclass(frozen=True, slots=True)
class EphemeralPair:
    """An add/remove pair that cancelled out within one bin."""

    entity: Entity
    added: GraphEvent
    removed: GraphEvent


@dataclass(frozen=True)
class StageDiff:
    """Net effect of one bin: deletions then additions reproduce the bin.

    depicted maps a bin-event index to the sub-stage ("deletion" or
    "addition") that will show it; events collapsed as ephemeral pairs or
    plain no-ops are absent from the map.
    """

    node_deletions: frozenset[str]
    edge_deletions: frozenset[tuple]
    node_additions: frozenset[str]
    edge_additions: frozenset[tuple]
    ephemeral: tuple[EphemeralPair, ...]
    source_bin: Bin
    depicted: dict = field(default_factory=dict)

    @property
    def has_deletions(self) -> bool:
        return bool(self.node_deletions or self.edge_deletions)

    @property
    def has_additions(self) -> bool:
        return bool(self.node_additions or self.edge_additions)

    @property
    def is_empty(self) -> bool:
        return not (self.has_deletions or self.has_additions)


@dataclass(frozen=True, slots=True)
class StageTiming:
    """Durations of the active sub-stages; 0 marks a dropped sub-stage."""

    deletion_ms: int
    movement_ms: int
    addition_ms: int
    pause_ms: int

    @property
    def total_ms(self) -> int:
        return self.deletion_ms + self.movement_ms + self.addition_ms + self.pause_ms

    def to_dict(self) -> dict:
        return {"t_d": self.deletion_ms, "t_m": self.movement_ms,
                "t_a": self.addition_ms, "t_p": self.pause_ms, "T_an": self.total_ms}


def stage_timing(diff: StageDiff, config: StagingConfig) -> StageTiming:
    """Animation budget for a stage.

    Time- and event-based staging always run all four sub-stages (empty
    ones render as idle time) so the user can anticipate the rhythm.
    Hybrid drops the deletion and/or addition sub-stage when the diff has
    none, which is what lets it beat event-based staging on lag.
    """
    if config.strategy is Strategy.HYBRID:
        d = config.t_d if diff.has_deletions else 0
        a = config.t_a if diff.has_additions else 0
    else:
        d, a = config.t_d, config.t_a
    return StageTiming(deletion_ms=d, movement_ms=config.t_m,
                       addition_ms=a, pause_ms=config.t_p)


class StagingEngine:
    """The binning state machine. Callers must serialize feed/poll."""

    def __init__(self, config: StagingConfig, stream_start: int = 0):
        self._config = config
        self._pending: deque[GraphEvent] = deque()
        self._window_start = stream_start
        self._busy_until = stream_start
        self._last_feed_ts: int | None = None
        self._last_poll: int | None = None
        self._bins_emitted = 0
        self._seen_events = False
        self._awaiting_confirm: int | None = None  # trigger_time of unconfirmed bin

    @property
    def config(self) -> StagingConfig:
        return self._config

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    @property
    def pending_events(self) -> tuple[GraphEvent, ...]:
        return tuple(self._pending)

    @property
    def window_start(self) -> int:
        return self._window_start

    @property
    def busy_until(self) -> int:
        return self._busy_until

    @property
    def bins_emitted(self) -> int:
        return self._bins_emitted

    def update_config(self, config: StagingConfig):
        """Swap thresholds/strategy; takes effect at the next trigger
        evaluation. The pending buffer and current window are retained."""
        self._config = config

    def feed(self, event: GraphEvent) -> None:
        if self._last_feed_ts is not None and event.timestamp < self._last_feed_ts:
            raise ValueError(
                f"timestamp regression: event seq={event.seq} at {event.timestamp} ms "
                f"after event at {self._last_feed_ts} ms")
        self._last_feed_ts = event.timestamp
        self._seen_events = True
        self._pending.append(event)

    def confirm_stage(self, timing: StageTiming) -> None:
        """Tell the engine how long the emitted stage animates; required
        after every bin before the next poll."""
        if self._awaiting_confirm is None:
            raise RuntimeError("no emitted bin awaiting confirmation")
        self._busy_until = self._awaiting_confirm + timing.total_ms
        self._awaiting_confirm = None

    def poll(self, now: int) -> Bin | None:
        """Evaluate triggers at logical time now (all events with
        timestamp <= now must have been fed). Returns at most one bin;
        call repeatedly to drain multiple due triggers."""
        if self._last_poll is not None and now < self._last_poll:
            raise ValueError(f"poll time regression: {now} after {self._last_poll}")
        self._last_poll = now
        if self._awaiting_confirm is not None:
            raise RuntimeError("previous bin not confirmed via confirm_stage()")
        strategy = self._config.strategy
        if strategy is Strategy.TIME_BASED:
            return self._poll_time_based(now)
        if strategy is Strategy.EVENT_BASED:
            return self._poll_event_based(now)
        return self._poll_hybrid(now)

    def force_flush(self, flush_at: int) -> Bin | None:
        """Emit everything still pending as one time-threshold bin; used to
        close out an event-based stream whose remainder never reaches N."""
        if self._awaiting_confirm is not None:
            raise RuntimeError("previous bin not confirmed via confirm_stage()")
        if not self._pending:
            return None
        trigger = max(flush_at, self._busy_until, self._pending[-1].timestamp)
        events = tuple(self._pending)
        self._pending.clear()
        return self._emit(trigger, TriggerCause.TIME_THRESHOLD, events)

    # -- strategy-specific trigger evaluation --

    def _poll_time_based(self, now: int) -> Bin | None:
        cfg = self._config
        while True:
            boundary = self._window_start + cfg.t_i
            if boundary > now:
                return None
            fire_at = boundary
            if boundary < self._busy_until:
                # t_i fired mid-animation: extend the window to the
                # animation's end, then fire with everything pending.
                if self._busy_until > now:
                    return None
                fire_at = self._busy_until
            eligible = self._take_eligible(fire_at)
            if eligible:
                return self._emit(fire_at, TriggerCause.TIME_THRESHOLD, eligible)
            self._window_start = fire_at  # empty window advances silently

    def _poll_event_based(self, now: int) -> Bin | None:
        n = self._config.n_events
        if len(self._pending) < n:
            return None
        t_nth = self._pending[n - 1].timestamp
        fire_at = max(t_nth, self._busy_until)
        if fire_at > now:
            return None
        events = tuple(self._pending.popleft() for _ in range(n))
        return self._emit(fire_at, TriggerCause.EVENT_THRESHOLD, events)

    def _poll_hybrid(self, now: int) -> Bin | None:
        cfg = self._config
        while True:
            boundary = self._window_start + cfg.t_i
            cand_time = max(boundary, self._busy_until)
            cand_event = None
            if len(self._pending) >= cfg.n_events:
                cand_event = max(self._pending[cfg.n_events - 1].timestamp, self._busy_until)
            # Whichever threshold is crossed first; exact ties resolve as
            # the event threshold.
            if cand_event is not None and cand_event <= min(cand_time, now):
                events = tuple(self._pending.popleft() for _ in range(cfg.n_events))
                return self._emit(cand_event, TriggerCause.EVENT_THRESHOLD, events)
            if cand_time > now:
                return None
            eligible = self._take_eligible(cand_time)
            if eligible:
                return self._emit(cand_time, TriggerCause.TIME_THRESHOLD, eligible)
            if self._seen_events:
                # Nothing happened all window: converge the layout.
                return self._emit(cand_time, TriggerCause.CONVERGENCE_TICK, ())
            self._window_start = cand_time  # stream has not started yet

    def _take_eligible(self, fire_at: int) -> tuple[GraphEvent, ...]:
        taken = []
        while self._pending and self._pending[0].timestamp <= fire_at:
            taken.append(self._pending.popleft())
        return tuple(taken)

    def _emit(self, trigger_time: int, cause: TriggerCause,
              events: tuple[GraphEvent, ...]) -> Bin:
        # Under backlog gating a bin's oldest events can predate the
        # engine's current window; the bin reports the span it covers.
        window_start = self._window_start
        if events:
            window_start = min(window_start, events[0].timestamp)
        emitted = Bin(window_start=window_start, trigger_time=trigger_time,
                      trigger_cause=cause, events=events)
        self._window_start = trigger_time
        self._bins_emitted += 1
        self._awaiting_confirm = trigger_time
        return emitted

    # -- session checkpointing --

    def checkpoint(self) -> str:
        """Serialize engine state to a versioned text blob."""
        if self._awaiting_confirm is not None:
            raise RuntimeError("cannot checkpoint with an unconfirmed bin")
        return json.dumps({
            "version": CHECKPOINT_VERSION,
            "config": self._config.to_dict(),
            "window_start": self._window_start,
            "busy_until": self._busy_until,
            "last_feed_ts": self._last_feed_ts,
            "last_poll": self._last_poll,
            "bins_emitted": self._bins_emitted,
            "seen_events": self._seen_events,
            "pending": [ev.to_dict() for ev in self._pending],
        }, separators=(",", ":"))

    @classmethod
    def restore(cls, blob: str) -> "StagingEngine":
        data = json.loads(blob)
        version = data.get("version")
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint version mismatch: got {version}, "
                             f"expected {CHECKPOINT_VERSION}")
        engine = cls(StagingConfig.from_dict(data["config"]))
        engine._window_start = data["window_start"]
        engine._busy_until = data["busy_until"]
        engine._last_feed_ts = data["last_feed_ts"]
        engine._last_poll = data["last_poll"]
        engine._bins_emitted = data["bins_emitted"]
        engine._seen_events = data["seen_events"]
        engine._pending = deque(GraphEvent.from_dict(d) for d in data["pending"])
        return engine


def compose_stage(stage_bin: Bin, pre_state: GraphState) -> StageDiff:
    """Collapse a bin's raw events into net deletion/addition sets.

    Entities that are added and removed within the bin (in either order,
    relative to their pre-bin membership) are moved to the ephemeral list
    instead of the diff; applying deletions then additions to the pre-bin
    state is equivalent to replaying the raw events in order.
    """
    sim_nodes = set(pre_state.nodes)
    sim_edges = set(pre_state.edges)
    # entity -> ordered effective toggles [(op, event, bin_index|None)]
    toggles: dict[Entity, list[tuple[str, GraphEvent, int | None]]] = {}

    def note(entity: Entity, op: str, ev: GraphEvent, idx: int | None):
        toggles.setdefault(entity, []).append((op, ev, idx))

    for idx, ev in enumerate(stage_bin.events):
        kind = ev.kind
        if kind is EventKind.NODE_ADD:
            if ev.subject not in sim_nodes:
                sim_nodes.add(ev.subject)
                note(ev.subject, "add", ev, idx)
        elif kind is EventKind.NODE_REMOVE:
            if ev.subject in sim_nodes:
                for e in sorted(x for x in sim_edges if ev.subject in x):
                    sim_edges.discard(e)
                    note(e, "remove", ev, idx)  # node removal takes its edges with it
                sim_nodes.discard(ev.subject)
                note(ev.subject, "remove", ev, idx)
        elif kind is EventKind.EDGE_ADD:
            key = ev.subject
            for endpoint in key:
                if endpoint not in sim_nodes:
                    sim_nodes.add(endpoint)
                    auto = GraphEvent(seq=ev.seq, timestamp=ev.timestamp,
                                      kind=EventKind.NODE_ADD, subject=endpoint,
                                      synthetic=True)
                    note(endpoint, "add", auto, None)
            if key not in sim_edges:
                sim_edges.add(key)
                note(key, "add", ev, idx)
        elif kind is EventKind.EDGE_REMOVE:
            key = ev.subject
            if key in sim_edges:
                sim_edges.discard(key)
                note(key, "remove", ev, idx)

    ephemeral: list[EphemeralPair] = []
    depicted: dict[int, str] = {}
    for entity, ops in toggles.items():
        in_pre = (entity in pre_state.edges) if isinstance(entity, tuple) else (entity in pre_state.nodes)
        # Effective toggles strictly alternate; pair off the ones that
        # return the entity to its pre-bin membership.
        if not in_pre:
            for i in range(0, len(ops) - 1, 2):
                (_, add_ev, _), (_, rem_ev, _) = ops[i], ops[i + 1]
                ephemeral.append(EphemeralPair(entity=entity, added=add_ev, removed=rem_ev))
            if len(ops) % 2 == 1:  # trailing add survives as a net addition
                _, _, idx = ops[-1]
                if idx is not None:
                    depicted[idx] = "addition"
        else:
            for i in range(0, len(ops) - 1, 2):
                (_, rem_ev, _), (_, add_ev, _) = ops[i], ops[i + 1]
                ephemeral.append(EphemeralPair(entity=entity, added=add_ev, removed=rem_ev))
            if len(ops) % 2 == 1:  # trailing remove survives as a net deletion
                _, _, idx = ops[-1]
                if idx is not None:
                    depicted[idx] = "deletion"

    return StageDiff(
        node_deletions=frozenset(pre_state.nodes - sim_nodes),
        edge_deletions=frozenset(pre_state.edges - sim_edges),
        node_additions=frozenset(sim_nodes - pre_state.nodes),
        edge_additions=frozenset(sim_edges - pre_state.edges),
        ephemeral=tuple(ephemeral),
        source_bin=stage_bin,
        depicted=depicted,
    )


def apply_diff(diff: StageDiff, state: GraphState) -> GraphState:
    """Apply a net diff (deletions first, then additions) in place."""
    for e in diff.edge_deletions:
        state.edges.discard(e)
    for n in diff.node_deletions:
        state.nodes.discard(n)
        state.labels.pop(n, None)
    for n in diff.node_additions:
        state.nodes.add(n)
    for e in diff.edge_additions:
        state.edges.add(e)
    return state
