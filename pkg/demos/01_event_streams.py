"""Parsing event streams and adapting flow-style monitoring records.

Shows: the native CSV format, lenient vs strict application, and how a
handful of overlapping network flows becomes a self-consistent stream of
node/edge add/remove events.
"""

from graphstage import (ApplyLog, GraphState, apply_event, flow_adapter,
                        parse_event_stream, parse_flow_csv)

NATIVE = """\
seq,timestamp_ms,kind,subject_a,subject_b,label
0,300,node_add,alice,,Alice
1,100,node_add,bob,,Bob
2,900,edge_add,alice,bob,
3,2500,node_add,carol,,Carol
4,2600,edge_add,bob,carol,
5,5200,node_remove,alice,,
"""

FLOWS = """\
time_ms,duration_ms,source,destination,protocol
0,4000,C1,C2,tcp
1500,3000,C1,C2,tcp
2200,0,C4,C5,icmp
3000,2500,C2,C4,tcp
"""

events = parse_event_stream(NATIVE)
print("native stream, sorted by timestamp (seq reassigned):")
for ev in events:
    print(f"  seq={ev.seq} t={ev.timestamp:>5} {ev.kind.value:<12} {ev.subject}")

state = GraphState()
log = ApplyLog()
for ev in events:
    apply_event(state, ev, log=log)
print(f"\nfinal graph: nodes={sorted(state.nodes)} edges={sorted(state.edges)}")
print(f"labels survive: {state.labels}")

print("\nflow records -> graph events (overlaps merge, zero-duration gets a floor):")
records = parse_flow_csv(FLOWS)
for ev in flow_adapter(records, min_lifetime=2000):
    print(f"  t={ev.timestamp:>5} {ev.kind.value:<12} {ev.subject}")
print("note: the two C1-C2 flows merged into one edge lifetime [0, 4500]")
