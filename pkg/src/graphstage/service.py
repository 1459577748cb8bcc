"""Live replay service: plays a recorded event file as a stream.

One asyncio pipeline task owns the engine and layout; a connection layer
fans stage broadcasts out to clients (newline-delimited JSON over plain
TCP, optionally also WebSocket for the browser dashboard) and funnels
control commands into a queue that is applied only between stages.

The broadcast stage sequence is a deterministic function of (event file,
initial config, seed, timed control transcript): trigger instants are
computed from event timestamps on the replay clock, never from wall
time, so the same file replayed at any speed broadcasts byte-identical
stage messages. The session log records exactly that stage sequence
(plus one version header); hello/heartbeat/notice messages are transport
chatter and are not logged. At end of stream the pending buffer is
drained the same way the offline composer drains it, then the server
idles with heartbeats.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .events import (FORMAT_FLOW_CSV, FORMAT_NATIVE_CSV, GraphEvent, flow_adapter,
                     parse_event_stream, parse_flow_csv)
from .layout import LayoutParams
from .pipeline import StagePipeline, StageResult, encode_message
from .staging import StagingConfig, Strategy

logger = logging.getLogger(__name__)

SESSION_LOG_VERSION = 1
HEARTBEAT_INTERVAL_MS = 1000
WIRE_HELLO_VERSION = 1


class SessionLogError(ValueError):
    pass


@dataclass
class SessionConfig:
    event_path: str
    fmt: str = FORMAT_NATIVE_CSV
    staging: StagingConfig = field(default_factory=StagingConfig)
    speed: float = 1.0
    listen: tuple[str, int] = ("127.0.0.1", 8900)
    ws_listen: tuple[str, int] | None = None
    session_log: str | None = None
    snapshot_path: str | None = None
    seed: int = 42
    layout_params: LayoutParams = field(default_factory=LayoutParams)
    min_lifetime_ms: int = 0

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError(f"speed_multiplier must be > 0, got {self.speed}")


def load_events(path: str, fmt: str, min_lifetime_ms: int = 0) -> list[GraphEvent]:
    text = Path(path).read_text()
    if fmt == FORMAT_FLOW_CSV:
        return flow_adapter(parse_flow_csv(text), min_lifetime=min_lifetime_ms)
    return parse_event_stream(text, fmt)


def _hello_line() -> str:
    return encode_message({"type": "hello", "version": WIRE_HELLO_VERSION})


def _notice_line(text: str) -> str:
    return encode_message({"type": "notice", "text": text})


def _heartbeat_line(backlog: int, pending: int) -> str:
    return encode_message({"type": "heartbeat", "backlog": backlog, "pending": pending})


class ReplayServer:
    """Replays one event file to any number of connected clients."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self._events: list[GraphEvent] = []
        self._pipeline: StagePipeline | None = None
        self._clients: set[asyncio.StreamWriter] = set()
        self._ws_clients: set = set()
        self._commands: asyncio.Queue = None  # created on start
        self._stop_event: asyncio.Event | None = None
        self._paused = False
        self._speed = config.speed
        self._replay_base = 0.0
        self._wall_base = 0.0
        self._loop: asyncio.AbstractEventLoop | None = None
        self._log_fh = None
        self._tcp_server: asyncio.AbstractServer | None = None
        self._ws_server = None
        self.bound_address: tuple[str, int] | None = None
        self.ws_bound_address: tuple[str, int] | None = None
        self.drained = threading.Event()
        self.started = threading.Event()
        self.stage_lines: list[str] = []  # broadcast stage messages, in order

    # -- lifecycle --

    async def start(self):
        self._loop = asyncio.get_running_loop()
        self._commands = asyncio.Queue()
        self._stop_event = asyncio.Event()
        try:
            self._events = load_events(self.config.event_path, self.config.fmt,
                                       self.config.min_lifetime_ms)
        except (OSError, ValueError) as exc:
            raise RuntimeError(f"cannot load event file {self.config.event_path}: {exc}") from exc
        self._pipeline = StagePipeline(self.config.staging,
                                       layout_params=self.config.layout_params,
                                       seed=self.config.seed)
        self._pipeline.keep_history = False
        if self.config.session_log:
            self._log_fh = open(self.config.session_log, "w")
            header = {"type": "session", "version": SESSION_LOG_VERSION,
                      "config": self.config.staging.to_dict(), "seed": self.config.seed}
            self._log_fh.write(encode_message(header) + "\n")
        host, port = self.config.listen
        try:
            self._tcp_server = await asyncio.start_server(self._handle_tcp_client, host, port)
        except OSError as exc:
            raise RuntimeError(f"cannot bind {host}:{port}: {exc}") from exc
        sock = self._tcp_server.sockets[0]
        self.bound_address = sock.getsockname()[:2]
        if self.config.ws_listen is not None:
            import websockets
            ws_host, ws_port = self.config.ws_listen
            self._ws_server = await websockets.serve(self._handle_ws_client, ws_host, ws_port)
            ws_sock = next(iter(self._ws_server.sockets))
            self.ws_bound_address = ws_sock.getsockname()[:2]
        self._wall_base = self._loop.time()
        self._replay_base = 0.0
        self.started.set()
        logger.info("replay server listening on %s:%s (%d events)",
                    self.bound_address[0], self.bound_address[1], len(self._events))

    async def run(self):
        """start() must have completed; runs until request_stop()."""
        pipeline_task = asyncio.create_task(self._pipeline_loop())
        await self._stop_event.wait()
        pipeline_task.cancel()
        try:
            await pipeline_task
        except asyncio.CancelledError:
            pass
        await self._close()

    async def serve(self):
        await self.start()
        await self.run()

    def request_stop(self):
        if self._loop is not None and self._stop_event is not None:
            self._loop.call_soon_threadsafe(self._stop_event.set)

    async def _close(self):
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        for writer in list(self._clients):
            writer.close()
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # -- replay clock --

    def _replay_now(self) -> float:
        if self._paused:
            return self._replay_base
        return self._replay_base + (self._loop.time() - self._wall_base) * 1000.0 * self._speed

    def _rebase_clock(self):
        self._replay_base = self._replay_now()
        self._wall_base = self._loop.time()

    # -- the pipeline task --

    async def _pipeline_loop(self):
        pl = self._pipeline
        events = self._events
        idx = 0
        last_ts = events[-1].timestamp if events else 0
        drained = False
        next_heartbeat = 0.0
        while True:
            replay_ms = self._replay_now()
            progressed = False

            # control commands apply between stages, never mid-animation
            if not self._commands.empty() and replay_ms >= pl.engine.busy_until:
                while not self._commands.empty():
                    command = self._commands.get_nowait()
                    self._apply_command(command, replay_ms)
                progressed = True

            if not self._paused:
                while idx < len(events) and events[idx].timestamp <= replay_ms:
                    pl.feed(events[idx])
                    idx += 1
                    progressed = True
                if idx < len(events):
                    while True:
                        result = pl.poll(int(replay_ms))
                        if result is None:
                            break
                        self._emit_stage(result)
                        progressed = True
                elif not drained:
                    for result in pl.drain(last_ts):
                        self._emit_stage(result)
                    drained = True
                    self.drained.set()
                    progressed = True

            if replay_ms >= next_heartbeat:
                self._broadcast(_heartbeat_line(*self._lag_pressure()))
                next_heartbeat = (replay_ms // HEARTBEAT_INTERVAL_MS + 1) * HEARTBEAT_INTERVAL_MS

            if not progressed:
                await asyncio.sleep(0.005)
            else:
                await asyncio.sleep(0)

    def _lag_pressure(self) -> tuple[int, int]:
        """(backlog, pending): backlog counts events that have waited past
        the last trigger, pending is the whole buffer."""
        engine = self._pipeline.engine
        pending = engine.pending_count
        cutoff = engine.window_start
        backlog = sum(1 for ev in engine.pending_events if ev.timestamp <= cutoff)
        return backlog, pending

    def _emit_stage(self, result: StageResult):
        line = result.message_line
        self.stage_lines.append(line)
        if self._log_fh is not None:
            self._log_fh.write(line + "\n")
            self._log_fh.flush()
        self._broadcast(line)

    # -- control commands --

    def _apply_command(self, command: dict, replay_ms: float):
        name = str(command.get("command", ""))
        args = command.get("args") or {}
        engine = self._pipeline.engine
        try:
            if name == "set_strategy":
                cfg = replace(engine.config, strategy=Strategy(str(args["strategy"])))
                engine.update_config(cfg)
                self._broadcast(_notice_line(f"StrategyChanged to {cfg.strategy.value}"))
            elif name == "set_thresholds":
                fields = {}
                if "t_i" in args:
                    fields["t_i"] = int(args["t_i"])
                if "n_events" in args:
                    fields["n_events"] = int(args["n_events"])
                if not fields:
                    raise ValueError("set_thresholds needs t_i and/or n_events")
                cfg = replace(engine.config, **fields)
                engine.update_config(cfg)
                self._broadcast(_notice_line(
                    f"ThresholdsChanged t_i={cfg.t_i} n_events={cfg.n_events}"))
            elif name == "pause":
                self._rebase_clock()
                self._paused = True
                self._broadcast(_notice_line(f"Paused at {int(replay_ms)}"))
            elif name == "resume":
                self._wall_base = self._loop.time()
                self._paused = False
                self._broadcast(_notice_line(f"Resumed at {int(self._replay_base)}"))
            elif name == "set_speed":
                self._rebase_clock()
                self._speed = float(args["multiplier"])
                if self._speed <= 0:
                    raise ValueError("speed multiplier must be > 0")
                self._broadcast(_notice_line(f"SpeedChanged to {self._speed}"))
            elif name == "snapshot":
                path = self.config.snapshot_path
                if not path:
                    raise ValueError("no snapshot path configured")
                Path(path).write_text(engine.checkpoint())
                self._broadcast(_notice_line(f"SnapshotSaved {path}"))
            else:
                raise ValueError(f"unknown command {name!r}")
        except (ValueError, KeyError) as exc:
            self._broadcast(_notice_line(f"CommandRejected {name}: {exc}"))

    # -- connections --

    def _broadcast(self, line: str):
        data = (line + "\n").encode()
        for writer in list(self._clients):
            try:
                writer.write(data)
            except Exception:
                self._clients.discard(writer)
        for ws in list(self._ws_clients):
            task = asyncio.ensure_future(ws.send(line))
            task.add_done_callback(lambda t, ws=ws: (
                self._ws_clients.discard(ws) if t.exception() else None))

    async def _handle_tcp_client(self, reader: asyncio.StreamReader,
                                 writer: asyncio.StreamWriter):
        writer.write((_hello_line() + "\n").encode())
        self._clients.add(writer)
        try:
            while True:
                raw = await reader.readline()
                if not raw:
                    break
                self._ingest_control(raw.decode(errors="replace"))
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._clients.discard(writer)
            writer.close()

    async def _handle_ws_client(self, ws):
        await ws.send(_hello_line())
        self._ws_clients.add(ws)
        try:
            async for raw in ws:
                if isinstance(raw, bytes):
                    raw = raw.decode(errors="replace")
                self._ingest_control(raw)
        except Exception:
            pass
        finally:
            self._ws_clients.discard(ws)

    def _ingest_control(self, raw: str):
        raw = raw.strip()
        if not raw:
            return
        try:
            message = json.loads(raw)
        except json.JSONDecodeError:
            self._broadcast(_notice_line("CommandRejected: invalid JSON"))
            return
        if not isinstance(message, dict) or message.get("type") != "control":
            self._broadcast(_notice_line("CommandRejected: expected control message"))
            return
        self._commands.put_nowait(message)


def serve(config: SessionConfig) -> None:
    """Blocking entry point: runs until interrupted."""
    server = ReplayServer(config)

    async def _main():
        await server.start()
        try:
            await server.run()
        except asyncio.CancelledError:
            pass

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass


class ServerThread:
    """Runs a ReplayServer on a background thread (tests, tooling)."""

    def __init__(self, config: SessionConfig):
        self.server = ReplayServer(config)
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._startup_error: BaseException | None = None

    def _run(self):
        try:
            asyncio.run(self.server.serve())
        except BaseException as exc:  # surfaced via start()
            self._startup_error = exc
            self.server.started.set()
            self.server.drained.set()

    def start(self, timeout: float = 10.0) -> "ServerThread":
        self._thread.start()
        if not self.server.started.wait(timeout):
            raise TimeoutError("server did not start in time")
        if self._startup_error is not None:
            raise RuntimeError(f"server failed to start: {self._startup_error}")
        return self

    @property
    def address(self) -> tuple[str, int]:
        return self.server.bound_address

    def wait_drained(self, timeout: float = 30.0) -> bool:
        return self.server.drained.wait(timeout)

    def stop(self, timeout: float = 10.0):
        self.server.request_stop()
        self._thread.join(timeout)


# -- session logs --

def read_session_log(path: str) -> list[str]:
    """Validate a session log and return its broadcast (stage) lines.

    Raises SessionLogError on version mismatch or corruption, naming the
    last valid record.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SessionLogError("empty session log")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise SessionLogError("corrupt session header (line 1)") from None
    if header.get("type") != "session":
        raise SessionLogError("missing session header")
    if header.get("version") != SESSION_LOG_VERSION:
        raise SessionLogError(f"session log version mismatch: got {header.get('version')}, "
                              f"expected {SESSION_LOG_VERSION}")
    out: list[str] = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            raise SessionLogError(
                f"truncated or corrupt log at line {i}; last valid record is "
                f"stage {len(out) - 1}" if out else
                f"truncated or corrupt log at line {i}; no valid records") from None
        if message.get("type") != "stage":
            raise SessionLogError(f"unexpected message type at line {i}")
        out.append(line)
    return out


def replay_session(path: str):
    """Yield the recorded broadcast sequence, byte-identical to the run
    that wrote it. Delivery pacing is the caller's concern."""
    for line in read_session_log(path):
        yield line
