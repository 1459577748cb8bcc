"""Scalability model: sweep event chunk sizes against arrival intervals.

A run drives a synthetic stream (n simultaneous addition events at times
0, tau, 2*tau, ...) through the production trigger state machine with
abstract animation cycles: constant full-length stages for the time- and
event-based strategies, variable-length additions-only stages (no
deletion sub-stage) for hybrid. Convergence ticks animate nothing in an
abstract stream, so they cost zero cycle time here; the live pipeline
still gives them their movement+pause budget. An event's delay is the
time from its occurrence to the trigger of the bin that shows it. No
randomness anywhere: identical specs give identical results.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

from .events import EventKind
from .staging import Bin, StagingConfig, StagingEngine, StageTiming, Strategy, TriggerCause


class _SimEvent:
    """Timestamp-only stand-in for GraphEvent; the trigger state machine
    reads nothing else and the sweep feeds tens of millions of these."""

    __slots__ = ("seq", "timestamp", "kind", "subject", "label", "synthetic")

    def __init__(self, seq: int, timestamp: int):
        self.seq = seq
        self.timestamp = timestamp
        self.kind = EventKind.NODE_ADD
        self.subject = f"n{seq}"
        self.label = None
        self.synthetic = True

# Log-spaced arrival intervals, 8 s down to 1 ms (the sweep's finest grain).
DEFAULT_TAU_GRID_MS = (8000, 4000, 2000, 1000, 500, 250, 125, 62, 31, 16, 8, 4, 2, 1)
DEFAULT_CHUNK_RANGE = tuple(range(1, 11))


@dataclass(frozen=True, slots=True)
class SimulationSpec:
    strategy: Strategy
    chunk_size: int
    interval_ms: int
    run_duration_ms: int = 60_000
    event_cap: int = 5
    timing: StagingConfig = field(default_factory=StagingConfig)

    def __post_init__(self):
        if not 1 <= self.chunk_size <= 10:
            raise ValueError(f"chunk_size must be in 1..10, got {self.chunk_size}")
        if self.interval_ms < 1:
            raise ValueError(f"interval_ms must be >= 1, got {self.interval_ms}")
        if self.event_cap < 1:
            raise ValueError(f"event_cap must be >= 1, got {self.event_cap}")
        if self.run_duration_ms < 1:
            raise ValueError("run_duration_ms must be >= 1")

    def staging_config(self) -> StagingConfig:
        return replace(self.timing, strategy=self.strategy, n_events=self.event_cap)


@dataclass
class SimulationResult:
    spec: SimulationSpec
    per_event_delay: list[int]
    events_per_cycle: list[int]
    offset: int | None
    backlog_at_end: int
    generated: int

    @property
    def depicted(self) -> int:
        return len(self.per_event_delay)

    @property
    def mean_delay(self) -> float | None:
        if not self.per_event_delay:
            return None
        return sum(self.per_event_delay) / len(self.per_event_delay)

    @property
    def max_delay(self) -> int | None:
        return max(self.per_event_delay) if self.per_event_delay else None

    @property
    def mean_events_per_cycle(self) -> float | None:
        shown = [c for c in self.events_per_cycle if c > 0]
        if not shown:
            return None
        return sum(shown) / len(shown)


_ZERO_TIMING = StageTiming(0, 0, 0, 0)


def _cycle_timing(spec: SimulationSpec, emitted: Bin, cfg: StagingConfig) -> StageTiming:
    if spec.strategy is Strategy.HYBRID:
        if emitted.trigger_cause is TriggerCause.CONVERGENCE_TICK:
            return _ZERO_TIMING  # nothing to converge in an abstract stream
        # synthetic stream is additions only: no deletion sub-stage
        return StageTiming(0, cfg.t_m, cfg.t_a, cfg.t_p)
    return StageTiming(cfg.t_d, cfg.t_m, cfg.t_a, cfg.t_p)


def run(spec: SimulationSpec) -> SimulationResult:
    """Simulate one (strategy, chunk size, interval) cell."""
    cfg = spec.staging_config()
    engine = StagingEngine(cfg)
    delays: list[int] = []
    events_per_cycle: list[int] = []
    offset: int | None = None
    generated = 0
    seq = 0

    def drain(now: int):
        nonlocal offset
        while True:
            emitted = engine.poll(now)
            if emitted is None:
                return
            engine.confirm_stage(_cycle_timing(spec, emitted, cfg))
            if emitted.events:
                events_per_cycle.append(len(emitted.events))
                if offset is None:
                    offset = emitted.trigger_time - emitted.events[0].timestamp
                trig = emitted.trigger_time
                delays.extend(trig - ev.timestamp for ev in emitted.events)

    feed = engine.feed
    t = 0
    while t < spec.run_duration_ms:
        for _ in range(spec.chunk_size):
            feed(_SimEvent(seq, t))
            seq += 1
        generated += spec.chunk_size
        drain(t)
        t += spec.interval_ms
    drain(spec.run_duration_ms)

    return SimulationResult(
        spec=spec,
        per_event_delay=delays,
        events_per_cycle=events_per_cycle,
        offset=offset,
        backlog_at_end=engine.pending_count,
        generated=generated,
    )


@dataclass
class SweepResult:
    strategy: Strategy
    chunk_sizes: tuple[int, ...]
    tau_grid_ms: tuple[int, ...]
    cells: dict[tuple[int, int], SimulationResult]

    @property
    def metric_name(self) -> str:
        if self.strategy is Strategy.TIME_BASED:
            return "mean_events_per_cycle"
        return "mean_delay_ms"

    def cell_metric(self, n: int, tau: int) -> float:
        result = self.cells[(n, tau)]
        if self.strategy is Strategy.TIME_BASED:
            value = result.mean_events_per_cycle
        else:
            value = result.mean_delay
        return 0.0 if value is None else value

    def to_matrix_csv(self) -> str:
        """First row tau values, first column chunk sizes."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["n\\tau_ms"] + [str(t) for t in self.tau_grid_ms])
        for n in self.chunk_sizes:
            writer.writerow([n] + [f"{self.cell_metric(n, tau):.3f}" for tau in self.tau_grid_ms])
        return out.getvalue()

    def to_long_csv(self) -> str:
        """Long form for plotting: strategy,n,tau_ms,metric,value."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["strategy", "n", "tau_ms", "metric", "value"])
        for n in self.chunk_sizes:
            for tau in self.tau_grid_ms:
                writer.writerow([self.strategy.value, n, tau, self.metric_name,
                                 f"{self.cell_metric(n, tau):.3f}"])
        return out.getvalue()


def grid_sweep(template: SimulationSpec,
               chunk_sizes=DEFAULT_CHUNK_RANGE,
               tau_grid_ms=DEFAULT_TAU_GRID_MS) -> SweepResult:
    """One SimulationResult per (chunk size, interval) cell."""
    if not chunk_sizes or not tau_grid_ms:
        raise ValueError("chunk_sizes and tau_grid_ms must be non-empty")
    cells = {}
    for n in chunk_sizes:
        for tau in tau_grid_ms:
            cells[(n, tau)] = run(replace(template, chunk_size=n, interval_ms=tau))
    return SweepResult(strategy=template.strategy, chunk_sizes=tuple(chunk_sizes),
                       tau_grid_ms=tuple(tau_grid_ms), cells=cells)
