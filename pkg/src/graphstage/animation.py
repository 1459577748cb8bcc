"""Timed stage scripts and headless frame evaluation.

A StageScript turns one stage diff plus its layout movements into a
keyframe program with the fixed sub-stage order deletion - movement -
addition - pause (deletion/addition may be absent under hybrid staging).
frame_at() evaluates the script at any instant into a FrameSnapshot, the
headless render surface the tests (and the SVG exporter) consume.

Sub-stage presentation: entities to be deleted flash orange for the first
30% of the deletion sub-stage, then fade out; labels of deleted nodes
persist at half opacity through the movement sub-stage; survivors ease to
their new positions (slow-in/slow-out); added entities fade in with a
blue flash that clears before the sub-stage ends.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .events import NodeId
from .staging import Bin, StageDiff, StageTiming

HIGHLIGHT_NONE = "none"
HIGHLIGHT_DELETE = "delete-orange"
HIGHLIGHT_ADD = "add-blue"

EASING_SMOOTH = "smooth"
EASING_LINEAR = "linear"

DEFAULT_HIGHLIGHT_FRACTION = 0.3

# The figure-caption timings (0.5 s delete, 1.2 s move, 0.5 s add) exist
# as a preset; the canonical defaults stay 450/600/450.
FIGURE_PRESET_TIMING = StageTiming(deletion_ms=500, movement_ms=1200,
                                   addition_ms=500, pause_ms=500)


def ease(u: float, mode: str = EASING_SMOOTH) -> float:
    """Easing on [0,1]: smooth is the cubic 3u^2-2u^3 (zero slope at the
    endpoints, exactly 0.5 at the midpoint)."""
    if mode == EASING_LINEAR:
        return u
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True, slots=True)
class Move:
    node: NodeId
    source: tuple[float, float]
    target: tuple[float, float]


@dataclass(frozen=True)
class StageScript:
    """Immutable, renderable keyframe program for one stage."""

    stage_id: int
    start_time: int
    timing: StageTiming
    deletion_nodes: frozenset
    deletion_edges: frozenset
    addition_nodes: frozenset
    addition_edges: frozenset
    moves: tuple[Move, ...]
    positions_before: dict
    positions_after: dict
    pre_edges: frozenset
    ephemeral: tuple = ()
    easing: str = EASING_SMOOTH
    highlight_fraction: float = DEFAULT_HIGHLIGHT_FRACTION

    @property
    def sub_stages(self) -> list[tuple[str, int]]:
        """Active (name, duration) pairs in their fixed order."""
        t = self.timing
        out = []
        if t.deletion_ms:
            out.append(("deletion", t.deletion_ms))
        out.append(("movement", t.movement_ms))
        if t.addition_ms:
            out.append(("addition", t.addition_ms))
        out.append(("pause", t.pause_ms))
        return out

    @property
    def post_edges(self) -> frozenset:
        return (self.pre_edges - self.deletion_edges) | self.addition_edges

    @property
    def deletion_span(self) -> tuple[int, int]:
        return (0, self.timing.deletion_ms)

    @property
    def movement_span(self) -> tuple[int, int]:
        d = self.timing.deletion_ms
        return (d, d + self.timing.movement_ms)

    @property
    def addition_span(self) -> tuple[int, int]:
        start = self.timing.deletion_ms + self.timing.movement_ms
        return (start, start + self.timing.addition_ms)

    @property
    def pause_span(self) -> tuple[int, int]:
        start = (self.timing.deletion_ms + self.timing.movement_ms
                 + self.timing.addition_ms)
        return (start, start + self.timing.pause_ms)


@dataclass
class FrameSnapshot:
    """Visual state at one instant: positions, opacities, highlight tags."""

    t: int
    positions: dict[NodeId, tuple[float, float]]
    opacity: dict  # entity (node id or edge pair) -> [0,1]
    highlight: dict  # entity -> highlight tag
    label_opacity: dict[NodeId, float]

    def to_json_line(self) -> str:
        def ent_key(e):
            return "--".join(e) if isinstance(e, tuple) else e
        payload = {
            "t": self.t,
            "positions": {n: [round(x, 6), round(y, 6)]
                          for n, (x, y) in sorted(self.positions.items())},
            "opacity": {ent_key(e): round(v, 6)
                        for e, v in sorted(self.opacity.items(), key=lambda kv: ent_key(kv[0]))},
            "highlight": {ent_key(e): v
                          for e, v in sorted(self.highlight.items(), key=lambda kv: ent_key(kv[0]))
                          if v != HIGHLIGHT_NONE},
            "label_opacity": {n: round(v, 6) for n, v in sorted(self.label_opacity.items())},
        }
        return json.dumps(payload, separators=(",", ":"))


def build_script(diff: StageDiff, moves, timing: StageTiming, start_time: int,
                 positions_before: dict, positions_after: dict, pre_edges,
                 stage_id: int = 0, easing: str = EASING_SMOOTH,
                 highlight_fraction: float = DEFAULT_HIGHLIGHT_FRACTION) -> StageScript:
    """Assemble the keyframe script for one stage.

    timing must already reflect any hybrid sub-stage omission; a timing
    that drops a sub-stage the diff needs is rejected.
    """
    if timing.deletion_ms == 0 and diff.has_deletions:
        raise ValueError("timing drops the deletion sub-stage but the diff has deletions")
    if timing.addition_ms == 0 and diff.has_additions:
        raise ValueError("timing drops the addition sub-stage but the diff has additions")
    for node in diff.node_deletions:
        if node not in positions_before:
            raise ValueError(f"deleted node {node!r} has no pre-stage position")
    for node in diff.node_additions:
        if node not in positions_after:
            raise ValueError(f"added node {node!r} has no post-stage position")
    return StageScript(
        stage_id=stage_id,
        start_time=start_time,
        timing=timing,
        deletion_nodes=frozenset(diff.node_deletions),
        deletion_edges=frozenset(diff.edge_deletions),
        addition_nodes=frozenset(diff.node_additions),
        addition_edges=frozenset(diff.edge_additions),
        moves=tuple(Move(m.node, tuple(m.source), tuple(m.target)) for m in moves),
        positions_before=dict(positions_before),
        positions_after=dict(positions_after),
        pre_edges=frozenset(pre_edges),
        ephemeral=tuple(diff.ephemeral),
        easing=easing,
        highlight_fraction=highlight_fraction,
    )


def _ramp_down(t: float, start: float, end: float) -> float:
    """1 at start, 0 at end, clamped."""
    if end <= start:
        return 0.0
    return min(1.0, max(0.0, (end - t) / (end - start)))


def _ramp_up(t: float, start: float, end: float) -> float:
    if end <= start:
        return 1.0
    return min(1.0, max(0.0, (t - start) / (end - start)))


def frame_at(script: StageScript, t: int) -> FrameSnapshot:
    """Evaluate the script t milliseconds after stage start."""
    total = script.timing.total_ms
    if not 0 <= t <= total:
        raise ValueError(f"t={t} outside [0, {total}]")

    d_start, d_end = script.deletion_span
    m_start, m_end = script.movement_span
    a_start, a_end = script.addition_span
    has_deletion = script.timing.deletion_ms > 0
    has_addition = script.timing.addition_ms > 0

    # movement progress
    if t <= m_start:
        u = 0.0
    elif t >= m_end:
        u = 1.0
    else:
        u = ease((t - m_start) / (m_end - m_start), script.easing)

    moved = {m.node: m for m in script.moves}
    positions: dict[NodeId, tuple[float, float]] = {}
    for node, pos in script.positions_before.items():
        if node in script.deletion_nodes:
            positions[node] = pos  # frozen until it fades out
        elif node in moved:
            m = moved[node]
            positions[node] = (m.source[0] + u * (m.target[0] - m.source[0]),
                               m.source[1] + u * (m.target[1] - m.source[1]))
        else:
            positions[node] = script.positions_after.get(node, pos)
    for node in script.addition_nodes:
        positions[node] = script.positions_after[node]

    opacity: dict = {}
    highlight: dict = {}
    label_opacity: dict[NodeId, float] = {}

    flash_end = d_start + script.timing.deletion_ms * script.highlight_fraction
    for entity in list(script.deletion_nodes) + list(script.deletion_edges):
        if not has_deletion:  # unreachable per build_script validation
            opacity[entity] = 0.0
            continue
        if t < flash_end:
            opacity[entity] = 1.0
            highlight[entity] = HIGHLIGHT_DELETE
        elif t < d_end:
            opacity[entity] = _ramp_down(t, flash_end, d_end)
            highlight[entity] = HIGHLIGHT_NONE
        else:
            opacity[entity] = 0.0
            highlight[entity] = HIGHLIGHT_NONE

    add_flash_end = a_start + script.timing.addition_ms * script.highlight_fraction
    for entity in list(script.addition_nodes) + list(script.addition_edges):
        if not has_addition:
            opacity[entity] = 1.0
            continue
        if t < a_start:
            opacity[entity] = 0.0
            highlight[entity] = HIGHLIGHT_NONE
        elif t < a_end:
            opacity[entity] = _ramp_up(t, a_start, a_end)
            highlight[entity] = HIGHLIGHT_ADD if t < add_flash_end else HIGHLIGHT_NONE
        else:
            opacity[entity] = 1.0
            highlight[entity] = HIGHLIGHT_NONE

    survivors_nodes = set(script.positions_before) - script.deletion_nodes
    for node in survivors_nodes:
        opacity[node] = 1.0
    for edge in script.pre_edges - script.deletion_edges:
        opacity[edge] = 1.0

    # Labels of deleted nodes persist at half opacity through movement.
    for node in script.deletion_nodes:
        if m_start <= t < m_end:
            label_opacity[node] = 0.5
        else:
            label_opacity[node] = opacity.get(node, 0.0)

    snapshot = FrameSnapshot(t=t, positions=positions, opacity=opacity,
                             highlight=highlight, label_opacity=label_opacity)
    for node, (x, y) in positions.items():
        if not (math.isfinite(x) and math.isfinite(y)):
            raise AssertionError(f"non-finite frame position for {node!r}")
    return snapshot


def visible_entities(frame: FrameSnapshot, threshold: float = 0.0) -> tuple[set, set]:
    """Nodes and edges with opacity above the threshold."""
    nodes = {e for e, v in frame.opacity.items() if isinstance(e, str) and v > threshold}
    edges = {e for e, v in frame.opacity.items() if isinstance(e, tuple) and v > threshold}
    return nodes, edges


@dataclass(frozen=True, slots=True)
class LagRecord:
    """Delay between an event and the start of the sub-stage depicting it."""

    seq: int
    timestamp: int
    depiction_start: int | None
    ephemeral: bool = False

    @property
    def lag(self) -> int | None:
        if self.depiction_start is None:
            return None
        return self.depiction_start - self.timestamp


def stage_lag_records(stage_bin: Bin, diff: StageDiff, script: StageScript) -> list[LagRecord]:
    """Map every bin event to its depicting sub-stage start.

    Deletion events map to the deletion sub-stage start (= stage start),
    addition events to the addition sub-stage start; events collapsed as
    ephemeral pairs or no-ops are flagged and carry no depiction time.
    """
    records = []
    add_offset = script.timing.deletion_ms + script.timing.movement_ms
    for idx, ev in enumerate(stage_bin.events):
        role = diff.depicted.get(idx)
        if role == "deletion":
            records.append(LagRecord(seq=ev.seq, timestamp=ev.timestamp,
                                     depiction_start=script.start_time))
        elif role == "addition":
            records.append(LagRecord(seq=ev.seq, timestamp=ev.timestamp,
                                     depiction_start=script.start_time + add_offset))
        else:
            records.append(LagRecord(seq=ev.seq, timestamp=ev.timestamp,
                                     depiction_start=None, ephemeral=True))
    return records


@dataclass(frozen=True, slots=True)
class LagStats:
    count: int
    mean: float
    max: int
    p95: int


@dataclass
class LagSummary:
    records: list[LagRecord] = field(default_factory=list)
    by_strategy: dict[str, LagStats] = field(default_factory=dict)


def _percentile_nearest_rank(values: list[int], q: float) -> int:
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def lag_report(stage_history) -> LagSummary:
    """Aggregate lag over a run.

    stage_history is an iterable of (strategy_token, bin, diff, script)
    tuples; ephemeral events are flagged in the records but excluded from
    the per-strategy summaries.
    """
    summary = LagSummary()
    lags_by_strategy: dict[str, list[int]] = {}
    for strategy, stage_bin, diff, script in stage_history:
        for rec in stage_lag_records(stage_bin, diff, script):
            summary.records.append(rec)
            if not rec.ephemeral:
                lags_by_strategy.setdefault(str(strategy), []).append(rec.lag)
    for strategy, lags in lags_by_strategy.items():
        summary.by_strategy[strategy] = LagStats(
            count=len(lags),
            mean=sum(lags) / len(lags),
            max=max(lags),
            p95=_percentile_nearest_rank(lags, 0.95),
        )
    return summary


def export_frames_jsonl(script: StageScript, times: list[int]) -> str:
    """Newline-delimited frame records for golden-file comparisons."""
    return "\n".join(frame_at(script, t).to_json_line() for t in times) + "\n"


def frame_to_svg(frame: FrameSnapshot, size: int = 600, margin: float = 40.0,
                 node_radius: float = 8.0) -> str:
    """Render one frame as a standalone SVG (debugging/inspection aid)."""
    colors = {HIGHLIGHT_DELETE: "#e66a1f", HIGHLIGHT_ADD: "#2a6fdb"}
    pts = list(frame.positions.values())
    if pts:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
        scale = (size - 2 * margin) / span
        ox, oy = min(xs), min(ys)
    else:
        scale, ox, oy = 1.0, 0.0, 0.0

    def sx(x):
        return margin + (x - ox) * scale

    def sy(y):
        return margin + (y - oy) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    for entity, op in sorted(frame.opacity.items(), key=lambda kv: str(kv[0])):
        if not isinstance(entity, tuple) or op <= 0:
            continue
        a, b = entity
        if a not in frame.positions or b not in frame.positions:
            continue
        color = colors.get(frame.highlight.get(entity, HIGHLIGHT_NONE), "#888888")
        parts.append(f'<line x1="{sx(frame.positions[a][0]):.2f}" y1="{sy(frame.positions[a][1]):.2f}" '
                     f'x2="{sx(frame.positions[b][0]):.2f}" y2="{sy(frame.positions[b][1]):.2f}" '
                     f'stroke="{color}" stroke-opacity="{op:.3f}" stroke-width="1.5"/>')
    for node, (x, y) in sorted(frame.positions.items()):
        op = frame.opacity.get(node, 0.0)
        if op <= 0:
            continue
        color = colors.get(frame.highlight.get(node, HIGHLIGHT_NONE), "#444444")
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="{node_radius}" '
                     f'fill="{color}" fill-opacity="{op:.3f}"/>')
        lop = frame.label_opacity.get(node, op)
        if lop > 0:
            parts.append(f'<text x="{sx(x) + node_radius + 2:.2f}" y="{sy(y):.2f}" '
                         f'font-size="10" fill-opacity="{lop:.3f}">{node}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
