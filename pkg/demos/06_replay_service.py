"""Replay a recorded stream through the live service and steer it.

Shows: the newline-JSON wire protocol, a live strategy switch, and that
the recorded session equals the offline composer's output byte for byte.
"""

import json
import socket
import tempfile
import time
from pathlib import Path

from graphstage import (SessionConfig, ServerThread, StagingConfig, Strategy,
                        compose_stream, load_events, read_session_log)

EVENTS_CSV = """\
seq,timestamp_ms,kind,subject_a,subject_b,label
0,100,node_add,web01,,
1,350,node_add,db01,,
2,900,edge_add,web01,db01,
3,2600,node_add,web02,,
4,2700,edge_add,web02,db01,
5,5100,edge_add,web01,web02,
6,7400,node_remove,web01,,
"""

workdir = Path(tempfile.mkdtemp(prefix="graphstage-demo-"))
event_path = workdir / "events.csv"
event_path.write_text(EVENTS_CSV)
session_log = workdir / "session.jsonl"

config = SessionConfig(event_path=str(event_path),
                       staging=StagingConfig(strategy=Strategy.HYBRID),
                       speed=20.0,  # 20x real time
                       listen=("127.0.0.1", 0),
                       session_log=str(session_log))
thread = ServerThread(config).start()
host, port = thread.address
print(f"server on {host}:{port}, replaying at {config.speed}x\n")

sock = socket.create_connection((host, port), timeout=10)
fh = sock.makefile("rwb")
fh.write(b'{"type":"control","command":"set_strategy","args":{"strategy":"hybrid"}}\n')
fh.flush()

deadline = time.monotonic() + 30
stages = 0
while time.monotonic() < deadline and not thread.server.drained.is_set():
    sock.settimeout(1.0)
    try:
        raw = fh.readline()
    except socket.timeout:
        continue
    if not raw:
        break
    message = json.loads(raw)
    if message["type"] == "stage":
        stages += 1
        print(f"stage {message['stage_id']}: cause={message['cause']} "
              f"T_an={message['timing']['T_an']} +{len(message['additions'])} "
              f"-{len(message['deletions'])} moves={len(message['moves'])}")
    elif message["type"] == "notice":
        print(f"notice: {message['text']}")
sock.close()
thread.server.drained.wait(30)
thread.stop()

recorded = read_session_log(str(session_log))
offline = [r.message_line for r in compose_stream(
    load_events(str(event_path), "native-csv"), config.staging, seed=config.seed)]
print(f"\nrecorded {len(recorded)} stages; offline composer produced {len(offline)}")
print("byte-identical:", "\n".join(recorded) == "\n".join(offline))
