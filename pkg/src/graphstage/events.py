"""Graph events, graph state, stream parsing, and the flow-record adapter.

Everything downstream (binning, layout, animation) consumes the two core
types defined here: GraphEvent, a single timestamped change to the network,
and GraphState, the node/edge sets those changes mutate. Timestamps are
integer milliseconds since the stream epoch.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from enum import Enum

logger = logging.getLogger(__name__)

NodeId = str
EdgeKey = tuple[str, str]
Entity = "NodeId | EdgeKey"


class EventKind(str, Enum):
    NODE_ADD = "node_add"
    NODE_REMOVE = "node_remove"
    EDGE_ADD = "edge_add"
    EDGE_REMOVE = "edge_remove"

    @property
    def is_edge(self) -> bool:
        return self in (EventKind.EDGE_ADD, EventKind.EDGE_REMOVE)

    @property
    def is_removal(self) -> bool:
        return self in (EventKind.NODE_REMOVE, EventKind.EDGE_REMOVE)


def edge_key(a: NodeId, b: NodeId) -> EdgeKey:
    """Canonical unordered pair. Self-loops are rejected everywhere."""
    if a == b:
        raise ValueError(f"self-loop edge ({a!r},{b!r}) is not allowed")
    return (a, b) if a < b else (b, a)


_EDGE_KINDS = frozenset((EventKind.EDGE_ADD, EventKind.EDGE_REMOVE))


@dataclass(frozen=True, slots=True)
class GraphEvent:
    """One timestamped change to the network.

    seq is a monotone ordinal assigned after sorting a stream; synthetic
    marks events generated by an adapter rather than read from input.
    """

    seq: int
    timestamp: int
    kind: EventKind
    subject: NodeId | EdgeKey
    label: str | None = None
    synthetic: bool = False

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"event seq={self.seq}: negative timestamp {self.timestamp}")
        if self.kind in _EDGE_KINDS:
            if not isinstance(self.subject, tuple) or len(self.subject) != 2:
                raise ValueError(f"event seq={self.seq}: edge subject must be a node pair")
            a, b = self.subject
            if a == b:
                raise ValueError(f"event seq={self.seq}: edge endpoints must be distinct")
            if b < a:
                object.__setattr__(self, "subject", (b, a))
        else:
            if not isinstance(self.subject, str) or not self.subject:
                raise ValueError(f"event seq={self.seq}: node subject must be a non-empty string")

    def to_dict(self) -> dict:
        subject = list(self.subject) if self.kind.is_edge else self.subject
        return {
            "seq": self.seq,
            "timestamp_ms": self.timestamp,
            "kind": self.kind.value,
            "subject": subject,
            "label": self.label,
            "synthetic": self.synthetic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphEvent":
        kind = EventKind(d["kind"])
        subject = d["subject"]
        if kind.is_edge:
            subject = edge_key(subject[0], subject[1])
        return cls(
            seq=int(d["seq"]),
            timestamp=int(d["timestamp_ms"]),
            kind=kind,
            subject=subject,
            label=d.get("label"),
            synthetic=bool(d.get("synthetic", False)),
        )


@dataclass
class GraphState:
    """The network the events mutate: node set, unordered edge set, labels."""

    nodes: set[NodeId] = field(default_factory=set)
    edges: set[EdgeKey] = field(default_factory=set)
    labels: dict[NodeId, str] = field(default_factory=dict)

    def copy(self) -> "GraphState":
        return GraphState(set(self.nodes), set(self.edges), dict(self.labels))

    def incident_edges(self, node: NodeId) -> list[EdgeKey]:
        return sorted(e for e in self.edges if node in e)

    def neighbors(self, node: NodeId) -> list[NodeId]:
        out = []
        for a, b in self.edges:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return sorted(out)

    def check_invariants(self):
        for a, b in self.edges:
            if a == b:
                raise AssertionError(f"self-loop edge {a!r}")
            if a not in self.nodes or b not in self.nodes:
                raise AssertionError(f"edge ({a!r},{b!r}) has endpoint outside node set")


@dataclass(frozen=True, slots=True)
class FlowRecord:
    """A network-flow style monitoring record: a timed connection between hosts."""

    time: int
    duration: int
    source: NodeId
    destination: NodeId
    attributes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"flow record at t={self.time}: negative duration")


class StreamFormatError(ValueError):
    """Malformed stream input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class StrictApplyError(ValueError):
    """Raised in strict mode when an event cannot apply cleanly."""

    def __init__(self, event: GraphEvent, message: str):
        super().__init__(f"event seq={event.seq}: {message}")
        self.event = event


@dataclass
class ApplyLog:
    """Collects lenient-mode warnings and adapter-style synthetic events."""

    warnings: list[str] = field(default_factory=list)
    synthetic_events: list[GraphEvent] = field(default_factory=list)

    def warn(self, message: str):
        self.warnings.append(message)
        logger.warning(message)


def apply_event(state: GraphState, event: GraphEvent, strict: bool = False,
                log: ApplyLog | None = None) -> GraphState:
    """Mutate state per the event kind and return the same state.

    Lenient mode (default): duplicate adds and removals of absent entities
    are no-ops recorded on the log; an edge add referencing an absent node
    auto-creates it and records a synthetic node-add at the same timestamp.
    Strict mode turns all of those into StrictApplyError.
    Removing a node removes its incident edges first.
    """
    if log is None:
        log = ApplyLog()
    kind = event.kind
    if kind is EventKind.NODE_ADD:
        node = event.subject
        if node in state.nodes:
            if strict:
                raise StrictApplyError(event, f"duplicate add of node {node!r}")
            log.warn(f"event seq={event.seq}: duplicate add of node {node!r} ignored")
        else:
            state.nodes.add(node)
            if event.label is not None:
                state.labels[node] = event.label
    elif kind is EventKind.NODE_REMOVE:
        node = event.subject
        if node not in state.nodes:
            if strict:
                raise StrictApplyError(event, f"removal of absent node {node!r}")
            log.warn(f"event seq={event.seq}: removal of absent node {node!r} ignored")
        else:
            for e in state.incident_edges(node):
                state.edges.discard(e)
            state.nodes.discard(node)
            state.labels.pop(node, None)
    elif kind is EventKind.EDGE_ADD:
        key = event.subject
        for endpoint in key:
            if endpoint not in state.nodes:
                if strict:
                    raise StrictApplyError(event, f"edge references absent node {endpoint!r}")
                state.nodes.add(endpoint)
                log.synthetic_events.append(GraphEvent(
                    seq=event.seq, timestamp=event.timestamp,
                    kind=EventKind.NODE_ADD, subject=endpoint, synthetic=True))
        if key in state.edges:
            if strict:
                raise StrictApplyError(event, f"duplicate add of edge {key}")
            log.warn(f"event seq={event.seq}: duplicate add of edge {key} ignored")
        else:
            state.edges.add(key)
    elif kind is EventKind.EDGE_REMOVE:
        key = event.subject
        if key not in state.edges:
            if strict:
                raise StrictApplyError(event, f"removal of absent edge {key}")
            log.warn(f"event seq={event.seq}: removal of absent edge {key} ignored")
        else:
            state.edges.discard(key)
    else:  # pragma: no cover
        raise ValueError(f"unknown event kind {kind}")
    return state


def replay(events, state: GraphState | None = None, strict: bool = False,
           log: ApplyLog | None = None) -> GraphState:
    """Apply a whole event sequence to a (new) state. The reference oracle
    used throughout the test suite for net-effect checks."""
    if state is None:
        state = GraphState()
    for ev in events:
        apply_event(state, ev, strict=strict, log=log)
    return state


NATIVE_CSV_HEADER = ["seq", "timestamp_ms", "kind", "subject_a", "subject_b", "label"]
FLOW_CSV_HEADER = ["time_ms", "duration_ms", "source", "destination"]

FORMAT_NATIVE_CSV = "native-csv"
FORMAT_NATIVE_JSONL = "native-jsonl"
FORMAT_FLOW_CSV = "flow-csv"


def _parse_kind(token: str, line_no: int) -> EventKind:
    try:
        return EventKind(token)
    except ValueError:
        raise StreamFormatError(line_no, f"unknown kind token {token!r}") from None


def _parse_timestamp(token: str, line_no: int) -> int:
    try:
        ts = int(token)
    except ValueError:
        raise StreamFormatError(line_no, f"timestamp_ms {token!r} is not an integer") from None
    if ts < 0:
        raise StreamFormatError(line_no, f"negative timestamp {ts}")
    return ts


def _make_event(seq: int, ts: int, kind: EventKind, subject_a: str, subject_b: str,
                label: str | None, line_no: int) -> GraphEvent:
    if kind.is_edge:
        if not subject_a or not subject_b:
            raise StreamFormatError(line_no, "edge event needs two subjects")
        if subject_a == subject_b:
            raise StreamFormatError(line_no, "edge endpoints must be distinct")
        subject = edge_key(subject_a, subject_b)
    else:
        if not subject_a:
            raise StreamFormatError(line_no, "node event needs subject_a")
        if subject_b:
            raise StreamFormatError(line_no, "node event must leave subject_b empty")
        subject = subject_a
    return GraphEvent(seq=seq, timestamp=ts, kind=kind, subject=subject, label=label or None)


def parse_event_stream(text: str, fmt: str = FORMAT_NATIVE_CSV) -> list[GraphEvent]:
    """Parse a recorded event stream.

    Events come back stably sorted by timestamp (input order preserved
    between equal timestamps) with seq reassigned 0..n-1 after sorting;
    the seq column in the input is accepted but not trusted.
    """
    raw: list[GraphEvent] = []
    if fmt == FORMAT_NATIVE_CSV:
        reader = csv.reader(io.StringIO(text))
        header = None
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header != NATIVE_CSV_HEADER:
                    raise StreamFormatError(
                        line_no, f"expected header {','.join(NATIVE_CSV_HEADER)}")
                continue
            if len(row) != len(NATIVE_CSV_HEADER):
                raise StreamFormatError(line_no, f"expected {len(NATIVE_CSV_HEADER)} fields, got {len(row)}")
            _, ts_tok, kind_tok, sub_a, sub_b, label = [c.strip() for c in row]
            kind = _parse_kind(kind_tok, line_no)
            ts = _parse_timestamp(ts_tok, line_no)
            raw.append(_make_event(len(raw), ts, kind, sub_a, sub_b, label, line_no))
    elif fmt == FORMAT_NATIVE_JSONL:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamFormatError(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise StreamFormatError(line_no, "each line must be a JSON object")
            kind = _parse_kind(str(obj.get("kind", "")), line_no)
            ts = _parse_timestamp(str(obj.get("timestamp_ms", "")), line_no)
            sub_a = str(obj.get("subject_a") or "")
            sub_b = str(obj.get("subject_b") or "")
            label = obj.get("label")
            raw.append(_make_event(len(raw), ts, kind, sub_a, sub_b, label, line_no))
    else:
        raise ValueError(f"unknown stream format {fmt!r} (expected "
                         f"{FORMAT_NATIVE_CSV!r} or {FORMAT_NATIVE_JSONL!r})")
    ordered = sorted(raw, key=lambda e: e.timestamp)  # stable: ties keep input order
    return [GraphEvent(seq=i, timestamp=e.timestamp, kind=e.kind, subject=e.subject,
                       label=e.label, synthetic=e.synthetic)
            for i, e in enumerate(ordered)]


def parse_flow_csv(text: str) -> list[FlowRecord]:
    """Parse flow-style records: time_ms,duration_ms,source,destination plus
    free extra columns carried as attributes."""
    reader = csv.reader(io.StringIO(text))
    header = None
    extra_cols: list[str] = []
    records: list[FlowRecord] = []
    for line_no, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if header is None:
            header = [c.strip() for c in row]
            if header[: len(FLOW_CSV_HEADER)] != FLOW_CSV_HEADER:
                raise StreamFormatError(
                    line_no, f"expected header starting {','.join(FLOW_CSV_HEADER)}")
            extra_cols = header[len(FLOW_CSV_HEADER):]
            continue
        if len(row) != len(header):
            raise StreamFormatError(line_no, f"expected {len(header)} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        ts = _parse_timestamp(cells[0], line_no)
        try:
            duration = int(cells[1])
        except ValueError:
            raise StreamFormatError(line_no, f"duration_ms {cells[1]!r} is not an integer") from None
        if duration < 0:
            raise StreamFormatError(line_no, f"negative duration {duration}")
        if not cells[2] or not cells[3]:
            raise StreamFormatError(line_no, "source and destination are required")
        attributes = tuple(zip(extra_cols, cells[len(FLOW_CSV_HEADER):]))
        records.append(FlowRecord(time=ts, duration=duration, source=cells[2],
                                  destination=cells[3], attributes=attributes))
    return records


def flow_adapter(records: list[FlowRecord], min_lifetime: int = 0,
                 log: ApplyLog | None = None) -> list[GraphEvent]:
    """Turn flow records into graph events.

    Each record opens an edge at its start time and closes it at
    time + max(duration, min_lifetime); overlapping or touching flows on
    the same pair merge into one edge lifetime. Node adds/removes are
    synthesized by reference counting incident edges (0->1 adds, ->0
    removes). Self-loop records are skipped and logged. All output events
    are synthetic and re-sorted by timestamp.
    """
    if log is None:
        log = ApplyLog()
    intervals: dict[EdgeKey, list[list[int]]] = {}
    order: list[EdgeKey] = []
    last_time = None
    for rec in records:
        if last_time is not None and rec.time < last_time:
            raise ValueError(f"flow records out of order: {rec.time} after {last_time}")
        last_time = rec.time
        if rec.source == rec.destination:
            log.warn(f"flow record at t={rec.time}: self-loop "
                     f"{rec.source!r}->{rec.destination!r} skipped")
            continue
        key = edge_key(rec.source, rec.destination)
        end = rec.time + max(rec.duration, min_lifetime)
        spans = intervals.setdefault(key, [])
        if not spans:
            order.append(key)
        if spans and rec.time <= spans[-1][1]:
            spans[-1][1] = max(spans[-1][1], end)  # overlap or touch: extend
        else:
            spans.append([rec.time, end])

    adds: dict[int, list[EdgeKey]] = {}
    removes: dict[int, list[EdgeKey]] = {}
    for key in order:
        for start, end in intervals[key]:
            adds.setdefault(start, []).append(key)
            removes.setdefault(end, []).append(key)

    events: list[GraphEvent] = []
    degree: dict[NodeId, int] = {}

    def emit(ts: int, kind: EventKind, subject) -> None:
        events.append(GraphEvent(seq=len(events), timestamp=ts, kind=kind,
                                 subject=subject, synthetic=True))

    # Within one instant: node adds / edge adds / edge removes / node
    # removes, so replaying the output is clean even in strict mode.
    for ts in sorted(set(adds) | set(removes)):
        for key in sorted(adds.get(ts, [])):
            for node in key:
                if degree.get(node, 0) == 0:
                    emit(ts, EventKind.NODE_ADD, node)
                degree[node] = degree.get(node, 0) + 1
            emit(ts, EventKind.EDGE_ADD, key)
        dead: list[NodeId] = []
        for key in sorted(removes.get(ts, [])):
            emit(ts, EventKind.EDGE_REMOVE, key)
            for node in key:
                degree[node] -= 1
                if degree[node] == 0:
                    dead.append(node)
        for node in dead:
            emit(ts, EventKind.NODE_REMOVE, node)

    ordered = sorted(events, key=lambda e: e.timestamp)  # already ordered; keep the contract explicit
    return [GraphEvent(seq=i, timestamp=e.timestamp, kind=e.kind, subject=e.subject,
                       label=e.label, synthetic=True)
            for i, e in enumerate(ordered)]


def write_native_csv(events: list[GraphEvent]) -> str:
    """Inverse of parse_event_stream for the native CSV format."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(NATIVE_CSV_HEADER)
    for ev in events:
        if ev.kind.is_edge:
            a, b = ev.subject
        else:
            a, b = ev.subject, ""
        writer.writerow([ev.seq, ev.timestamp, ev.kind.value, a, b, ev.label or ""])
    return out.getvalue()
