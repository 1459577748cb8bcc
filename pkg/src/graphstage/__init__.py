"""graphstage: staged animation of online dynamic networks.

Events stream in, a staging strategy bins them (by time, event count, or
both), each bin becomes a net diff, an incremental force layout places
and settles the changed graph, and the result is a timed stage script
(deletion - movement - addition - pause) with per-event lag accounting.
A scalability simulator sweeps arrival rates against the trigger rules,
and a replay service broadcasts live stage scripts to clients.
"""

from .events import (ApplyLog, EventKind, FlowRecord, GraphEvent, GraphState,
                     StreamFormatError, StrictApplyError, apply_event, edge_key,
                     flow_adapter, parse_event_stream, parse_flow_csv, replay,
                     write_native_csv)
from .staging import (Bin, EphemeralPair, StageDiff, StageTiming, StagingConfig,
                      StagingEngine, Strategy, TriggerCause, apply_diff,
                      compose_stage, stage_timing)
from .layout import (LayoutParams, LayoutState, Movement, bounding_radius,
                     compute_energies, movements, place_new, refine)
from .animation import (FrameSnapshot, LagRecord, LagStats, LagSummary, Move,
                        StageScript, build_script, ease, export_frames_jsonl,
                        frame_at, frame_to_svg, lag_report, stage_lag_records,
                        visible_entities)
from .simulator import (DEFAULT_CHUNK_RANGE, DEFAULT_TAU_GRID_MS, SimulationResult,
                        SimulationSpec, SweepResult, grid_sweep)
from .simulator import run as run_simulation
from .pipeline import StagePipeline, StageResult, compose_stream, encode_stage_message
from .service import (ReplayServer, ServerThread, SessionConfig, SessionLogError,
                      load_events, read_session_log, replay_session, serve)

__version__ = "0.1.0"
