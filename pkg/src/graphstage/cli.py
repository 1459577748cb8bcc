"""Command-line entry point.

Subcommands: simulate (one scalability cell), sweep (the full grid),
compose (offline file -> stage-script dump), replay-serve (live replay
server), validate (format check). Exit codes: 0 success, 1 usage error,
2 data error. Set GRAPHSTAGE_LOG to a logging level name for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .events import (FORMAT_FLOW_CSV, FORMAT_NATIVE_CSV, FORMAT_NATIVE_JSONL,
                     StreamFormatError, flow_adapter, parse_event_stream, parse_flow_csv)
from .pipeline import compose_stream
from .service import SessionConfig, load_events, serve
from .simulator import (DEFAULT_CHUNK_RANGE, DEFAULT_TAU_GRID_MS, SimulationSpec,
                        grid_sweep, run as run_simulation)
from .staging import StagingConfig, Strategy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_STRATEGY_TOKENS = {"time": Strategy.TIME_BASED, "event": Strategy.EVENT_BASED,
                    "hybrid": Strategy.HYBRID}
_FORMAT_TOKENS = {"csv": FORMAT_NATIVE_CSV, "jsonl": FORMAT_NATIVE_JSONL,
                  "flow-csv": FORMAT_FLOW_CSV}


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are 1 here
        raise _UsageError(message)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="graphstage",
                             description="Staged animation engine for online dynamic networks.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_staging_flags(p):
        p.add_argument("--strategy", choices=sorted(_STRATEGY_TOKENS), default="hybrid")
        p.add_argument("--ti-ms", type=int, default=None, help="time threshold t_i in ms")
        p.add_argument("--n-events", type=int, default=None, help="event threshold N")

    p_sim = sub.add_parser("simulate", help="run one scalability simulation cell")
    add_staging_flags(p_sim)
    p_sim.add_argument("--chunk-size", type=int, default=5, help="events per arrival (1..10)")
    p_sim.add_argument("--interval-ms", type=int, default=2000, help="arrival interval in ms")
    p_sim.add_argument("--duration-ms", type=int, default=60_000)
    p_sim.add_argument("--event-cap", type=int, default=5)
    p_sim.add_argument("--out", default=None, help="write full result JSON here")

    p_sweep = sub.add_parser("sweep", help="sweep chunk sizes against arrival intervals")
    add_staging_flags(p_sweep)
    p_sweep.add_argument("--out", required=True, help="matrix CSV output path")
    p_sweep.add_argument("--long-out", default=None, help="long-form CSV output path")
    p_sweep.add_argument("--duration-ms", type=int, default=60_000)
    p_sweep.add_argument("--event-cap", type=int, default=5)

    p_compose = sub.add_parser("compose", help="offline event file -> stage message dump")
    add_staging_flags(p_compose)
    p_compose.add_argument("--in", dest="input", required=True)
    p_compose.add_argument("--format", choices=sorted(_FORMAT_TOKENS), default="csv")
    p_compose.add_argument("--out", required=True)
    p_compose.add_argument("--seed", type=int, default=42)
    p_compose.add_argument("--min-lifetime-ms", type=int, default=0,
                           help="minimum edge lifetime for flow records")

    p_serve = sub.add_parser("replay-serve", help="serve a recorded file as a live stream")
    add_staging_flags(p_serve)
    p_serve.add_argument("--in", dest="input", required=True)
    p_serve.add_argument("--format", choices=sorted(_FORMAT_TOKENS), default="csv")
    p_serve.add_argument("--listen", default="127.0.0.1:8900", help="host:port for TCP clients")
    p_serve.add_argument("--ws-listen", default=None, help="host:port for WebSocket clients")
    p_serve.add_argument("--speed", type=float, default=1.0, help="replay speed multiplier")
    p_serve.add_argument("--seed", type=int, default=42)
    p_serve.add_argument("--session-log", default=None)
    p_serve.add_argument("--snapshot-path", default=None)
    p_serve.add_argument("--min-lifetime-ms", type=int, default=0)

    p_val = sub.add_parser("validate", help="check an event file parses")
    p_val.add_argument("--in", dest="input", required=True)
    p_val.add_argument("--format", choices=sorted(_FORMAT_TOKENS), default="csv")
    return parser


def _staging_config(args) -> StagingConfig:
    kwargs = {"strategy": _STRATEGY_TOKENS[args.strategy]}
    if getattr(args, "ti_ms", None) is not None:
        kwargs["t_i"] = args.ti_ms
    if getattr(args, "n_events", None) is not None:
        kwargs["n_events"] = args.n_events
    try:
        return StagingConfig(**kwargs)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise _UsageError(f"--listen expects host:port, got {value!r}")
    try:
        return host, int(port)
    except ValueError:
        raise _UsageError(f"invalid port in {value!r}") from None


def _cmd_simulate(args) -> int:
    try:
        spec = SimulationSpec(strategy=_STRATEGY_TOKENS[args.strategy],
                              chunk_size=args.chunk_size, interval_ms=args.interval_ms,
                              run_duration_ms=args.duration_ms, event_cap=args.event_cap,
                              timing=_staging_config(args))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    result = run_simulation(spec)
    summary = {
        "strategy": args.strategy,
        "chunk_size": spec.chunk_size,
        "interval_ms": spec.interval_ms,
        "generated": result.generated,
        "depicted": result.depicted,
        "backlog_at_end": result.backlog_at_end,
        "offset_ms": result.offset,
        "mean_delay_ms": result.mean_delay,
        "max_delay_ms": result.max_delay,
        "mean_events_per_cycle": result.mean_events_per_cycle,
    }
    print(json.dumps(summary, indent=2))
    if args.out:
        full = dict(summary)
        full["per_event_delay"] = result.per_event_delay
        full["events_per_cycle"] = result.events_per_cycle
        Path(args.out).write_text(json.dumps(full, indent=2) + "\n")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    template = SimulationSpec(strategy=_STRATEGY_TOKENS[args.strategy],
                              chunk_size=1, interval_ms=1000,
                              run_duration_ms=args.duration_ms, event_cap=args.event_cap,
                              timing=_staging_config(args))
    sweep = grid_sweep(template, DEFAULT_CHUNK_RANGE, DEFAULT_TAU_GRID_MS)
    Path(args.out).write_text(sweep.to_matrix_csv())
    if args.long_out:
        Path(args.long_out).write_text(sweep.to_long_csv())
    print(f"wrote {len(sweep.chunk_sizes) * len(sweep.tau_grid_ms)} cells to {args.out}")
    return EXIT_OK


def _cmd_compose(args) -> int:
    config = _staging_config(args)
    events = load_events(args.input, _FORMAT_TOKENS[args.format], args.min_lifetime_ms)
    results = compose_stream(events, config, seed=args.seed)
    with open(args.out, "w") as fh:
        for result in results:
            fh.write(result.message_line + "\n")
    print(f"composed {len(results)} stages from {len(events)} events into {args.out}")
    return EXIT_OK


def _cmd_replay_serve(args) -> int:
    config = SessionConfig(
        event_path=args.input,
        fmt=_FORMAT_TOKENS[args.format],
        staging=_staging_config(args),
        speed=args.speed,
        listen=_parse_listen(args.listen),
        ws_listen=_parse_listen(args.ws_listen) if args.ws_listen else None,
        session_log=args.session_log,
        snapshot_path=args.snapshot_path,
        seed=args.seed,
        min_lifetime_ms=args.min_lifetime_ms,
    )
    serve(config)
    return EXIT_OK


def _cmd_validate(args) -> int:
    text = Path(args.input).read_text()
    fmt = _FORMAT_TOKENS[args.format]
    if fmt == FORMAT_FLOW_CSV:
        records = parse_flow_csv(text)
        events = flow_adapter(records)
        print(f"{args.input}: {len(records)} flow records -> {len(events)} events, ok")
    else:
        events = parse_event_stream(text, fmt)
        print(f"{args.input}: {len(events)} events, ok")
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("GRAPHSTAGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "compose": _cmd_compose,
        "replay-serve": _cmd_replay_serve,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.subcommand](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StreamFormatError as exc:
        print(f"error: {getattr(args, 'input', '<input>')}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: cannot read {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
