"""Live control service: one closed-loop session shared over TCP.

Wire protocol (newline-delimited JSON objects). A client connects over a raw
socket and exchanges NDJSON lines, or sends an HTTP WebSocket upgrade on the
same port and exchanges the same JSON documents as text frames; the server
tells them apart by the first bytes ("{" vs "GET ").

Server to client message types:
  snapshot  full session state (v=1), sent on connect, after every scan,
            after every accepted command, and at least once per second
  ack       a command was applied; scan_index is the first scan it affects
  reject    a command was understood but refused (reason)
  error     malformed traffic on this connection, or a broadcast engine fault

Client to server: {"t": "cmd", "id": <any>, "action": ..., ...}. Actions:
set_mode, manual_pump, set_demand, inject_fault, set_speed, pause, resume,
reset. See docs/protocol.md for the field-by-field contract.

Snapshots are throttled to at most 30 per second per client and coalesce
(newest wins); acks, rejects and errors are never dropped. Commands apply
between scans under the session lock, so a scan never observes a half-applied
command. The Session core is single-threaded and deterministic; all pacing
and socket work lives in ControlService.
"""

from __future__ import annotations

import json
import random
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass

from . import wsframe
from .alternation import (
    AlternationParams,
    SignalBinding,
    build_alternation_chart,
    closed_loop_step,
    default_binding,
    validate_binding,
)
from .chart import Chart
from .engine import engine_reset
from .errors import GrafcetError, StoredActionConflictError, UnstableChartError
from .harness import ScenarioConfig, scenario_chart
from .plant import (
    FAULT_OPS,
    PUMPS,
    DemandProfile,
    FaultEvent,
    FaultScript,
    PlantParams,
    apply_fault_events,
    plant_reset,
)

PROTOCOL_VERSION = 1
MAX_SNAPSHOTS_PER_SECOND = 30.0
MIN_SPEED = 0.01
MAX_SPEED = 1000.0
MODES = ("auto", "manual")
KEEPALIVE_SECONDS = 1.0
MAX_LINE = 1 << 20


def _round6(x: float) -> float:
    return round(x, 6)


class Session:
    """Deterministic single-threaded core of the live service: one chart in
    closed loop with one plant, plus the operator-facing settings. No sockets,
    no clocks, no threads; tick() advances exactly one scan."""

    def __init__(
        self,
        *,
        chart: "Chart | None" = None,
        plant_params: "PlantParams | None" = None,
        alternation: "AlternationParams | None" = None,
        demand: "DemandProfile | None" = None,
        faults: "FaultScript | None" = None,
        binding: "SignalBinding | None" = None,
        dt: float = 0.1,
        seed: int = 0,
    ):
        self.plant_params = plant_params or PlantParams()
        self.chart = chart or build_alternation_chart(alternation or AlternationParams())
        self.binding = binding or default_binding()
        problems = validate_binding(self.chart, self.binding)
        if problems:
            raise ValueError("chart does not fit the plant binding: " + "; ".join(problems))
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        self.demand_profile = demand or DemandProfile.constant(0.8)
        self.faults = faults or FaultScript()
        self.dt = dt
        self.seed = seed
        self.mode = "auto"
        self.manual = {p: False for p in PUMPS}
        self.demand_override: "float | None" = None
        self._reset_core()

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig, *, dt: "float | None" = None) -> "Session":
        return cls(
            chart=scenario_chart(cfg),
            plant_params=cfg.plant,
            demand=cfg.demand,
            faults=cfg.faults,
            dt=dt if dt is not None else cfg.dt,
            seed=cfg.seed,
        )

    def _reset_core(self):
        self.engine = engine_reset(self.chart)
        self.plant = plant_reset(self.plant_params)
        self.rng = random.Random(self.seed)
        self.sensors = None
        self.last_tick = None
        self.last_demand: "float | None" = None
        self._script_pos = 0

    def reset(self):
        """Back to the initial situation; operator settings (mode, manual
        latches, demand override) survive the reset."""
        self._reset_core()

    @property
    def scan_index(self) -> int:
        return self.engine.scan_index

    def demand_at(self, t: float) -> float:
        if self.demand_override is not None:
            return self.demand_override
        return self.demand_profile.at(t)

    def tick(self) -> dict:
        """Advance one scan and return the resulting snapshot document.
        Raises UnstableChartError / StoredActionConflictError untouched; the
        session state is not advanced when a scan fails."""
        t = self.engine.scan_index * self.dt
        events = []
        while (
            self._script_pos < len(self.faults.events)
            and self.faults.events[self._script_pos].time <= t + 1e-12
        ):
            events.append(self.faults.events[self._script_pos])
            self._script_pos += 1
        if events:
            self.plant = apply_fault_events(self.plant, events)
        demand = self.demand_at(t)
        tick = closed_loop_step(
            self.engine,
            self.plant,
            self.binding,
            self.plant_params,
            demand,
            self.dt,
            prev_sensors=self.sensors,
            rng=self.rng,
            manual_commands=self.manual if self.mode == "manual" else None,
        )
        self.engine = tick.engine
        self.plant = tick.plant
        self.sensors = tick.sensors
        self.last_tick = tick
        self.last_demand = demand
        return self.snapshot()

    def snapshot(self) -> dict:
        """Current state as a wire document (core fields; the service adds the
        pacing fields paused/speed)."""
        tick = self.last_tick
        if tick is not None:
            inputs = {**tick.inputs.analogs, **tick.inputs.bools}
            outputs = dict(tick.outputs.bools)
            commands = dict(tick.commands)
            running = dict(tick.running)
            demand = self.last_demand
        else:
            inputs = {}
            outputs = {q: False for q in self.chart.outputs()}
            commands = {p: False for p in PUMPS}
            running = {p: False for p in PUMPS}
            demand = self.demand_at(self.engine.scan_index * self.dt)
        return {
            "t": "snapshot",
            "v": PROTOCOL_VERSION,
            "scan_index": self.engine.scan_index,
            "clock": _round6(self.engine.clock),
            "chart": self.chart.name,
            "steps": [s.id for s in self.chart.steps],
            "marking": sorted(self.engine.marking.active),
            "mode": self.mode,
            "pressure": _round6(self.plant.pressure),
            "demand": _round6(demand),
            "inputs": {
                k: (_round6(v) if isinstance(v, float) else v) for k, v in inputs.items()
            },
            "outputs": outputs,
            "commands": commands,
            "running": running,
            "faulted": dict(self.plant.faulted),
        }

    def apply(self, msg: dict) -> "tuple[bool, str | None]":
        """Apply a session-scope command. Returns (ok, reject_reason)."""
        action = msg.get("action")
        if action == "set_mode":
            mode = msg.get("mode")
            if mode not in MODES:
                return False, f"mode must be one of {list(MODES)}"
            if mode == "manual" and self.mode != "manual":
                # bumpless transfer: manual starts from what the chart drives
                source = self.last_tick.commands if self.last_tick else {}
                self.manual = {p: bool(source.get(p, False)) for p in PUMPS}
            self.mode = mode
            return True, None
        if action == "manual_pump":
            if self.mode != "manual":
                return False, "manual_pump requires manual mode"
            pump = msg.get("pump")
            if pump not in PUMPS:
                return False, f"pump must be one of {list(PUMPS)}"
            on = msg.get("on")
            if not isinstance(on, bool):
                return False, "on must be a boolean"
            self.manual[pump] = on
            return True, None
        if action == "set_demand":
            value = msg.get("value")
            if value is None:
                self.demand_override = None
                return True, None
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return False, "value must be a number or null"
            value = float(value)
            if not (0.0 <= value <= 100.0):
                return False, "demand must be within [0, 100]"
            self.demand_override = value
            return True, None
        if action == "inject_fault":
            pump = msg.get("pump")
            if pump not in PUMPS:
                return False, f"pump must be one of {list(PUMPS)}"
            op = msg.get("op")
            if op not in FAULT_OPS:
                return False, f"op must be one of {list(FAULT_OPS)}"
            now = max(0.0, self.engine.scan_index * self.dt)
            self.plant = apply_fault_events(
                self.plant, [FaultEvent(time=now, pump=pump, op=op)]
            )
            return True, None
        if action == "reset":
            self.reset()
            return True, None
        return False, f"unknown action {action!r}"


@dataclass(frozen=True)
class ServiceSettings:
    host: str = "127.0.0.1"
    port: int = 7410
    speed: float = 1.0
    scenario: "ScenarioConfig | None" = None
    start_paused: bool = False

    def __post_init__(self):
        if not (MIN_SPEED <= self.speed <= MAX_SPEED):
            raise ValueError(f"speed must be within [{MIN_SPEED}, {MAX_SPEED}]")


class _Client:
    """One connection: transport framing plus the outbound queue with
    snapshot coalescing."""

    def __init__(self, sock: socket.socket, kind: str):
        self.sock = sock
        self.kind = kind  # "ndjson" | "websocket"
        self.cond = threading.Condition()
        self.control: deque = deque()
        self.pending_snapshot: "dict | None" = None
        self.next_snapshot_at = 0.0
        self.closed = False
        # serializes writer-thread frames with the reader's close reply
        self.send_lock = threading.Lock()

    def send_bytes(self, data: bytes):
        with self.send_lock:
            self.sock.sendall(data)

    def encode(self, msg: dict) -> bytes:
        text = json.dumps(msg, separators=(",", ":"))
        if self.kind == "websocket":
            return wsframe.encode_text(text)
        return (text + "\n").encode("utf-8")

    def enqueue_control(self, msg: dict):
        with self.cond:
            if self.closed:
                return
            self.control.append(msg)
            self.cond.notify()

    def enqueue_snapshot(self, msg: dict):
        with self.cond:
            if self.closed:
                return
            self.pending_snapshot = msg
            self.cond.notify()

    def mark_closed(self):
        with self.cond:
            self.closed = True
            self.cond.notify_all()


class ControlService:
    """Owns the session, the scan pacing thread, and the listener."""

    def __init__(self, settings: "ServiceSettings | None" = None, session: "Session | None" = None):
        self.settings = settings or ServiceSettings()
        if session is not None:
            self.session = session
        elif self.settings.scenario is not None:
            self.session = Session.from_scenario(self.settings.scenario)
        else:
            self.session = Session()
        self._lock = threading.Lock()
        self._speed = self.settings.speed
        self._paused = self.settings.start_paused
        self._stopping = threading.Event()
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._listener: "socket.socket | None" = None
        self._threads: list[threading.Thread] = []
        self.host = self.settings.host
        self.port = self.settings.port

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> tuple[str, int]:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.settings.host, self.settings.port))
        listener.listen(16)
        self._listener = listener
        self.host, self.port = listener.getsockname()[:2]
        self._spawn(self._run_loop, name="grafcet-runner")
        self._spawn(self._accept_loop, name="grafcet-accept")
        return self.host, self.port

    def serve_forever(self, ready=None):
        self.start()
        if ready is not None:
            ready(self.host, self.port)
        try:
            while not self._stopping.wait(0.2):
                pass
        finally:
            self.stop()

    def stop(self):
        self._stopping.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            self._drop_client(client)
        for thread in self._threads:
            thread.join(timeout=2.0)

    def _spawn(self, fn, *args, name: str):
        thread = threading.Thread(target=fn, args=args, name=name, daemon=True)
        thread.start()
        self._threads.append(thread)

    # -- scan pacing ---------------------------------------------------------

    def _run_loop(self):
        next_at = time.monotonic()
        last_broadcast = 0.0
        while not self._stopping.is_set():
            with self._lock:
                paused = self._paused
                speed = self._speed
                dt = self.session.dt
            if paused:
                if time.monotonic() - last_broadcast >= KEEPALIVE_SECONDS:
                    self._broadcast_snapshot(self._snapshot())
                    last_broadcast = time.monotonic()
                self._stopping.wait(0.05)
                next_at = time.monotonic()
                continue
            try:
                with self._lock:
                    core = self.session.tick()
                    snap = self._decorate(core)
            except (UnstableChartError, StoredActionConflictError) as err:
                with self._lock:
                    self._paused = True
                self._broadcast_control(
                    {
                        "t": "error",
                        "message": str(err),
                        "scan_index": getattr(err, "scan_index", None),
                    }
                )
                continue
            self._broadcast_snapshot(snap)
            last_broadcast = time.monotonic()
            next_at += dt / speed
            now = time.monotonic()
            if next_at < now - 0.25:
                next_at = now  # fell behind; do not try to catch up in a burst
            delay = next_at - now
            if delay > 0:
                self._stopping.wait(delay)

    def _decorate(self, core: dict) -> dict:
        core["paused"] = self._paused
        core["speed"] = self._speed
        return core

    def _snapshot(self) -> dict:
        with self._lock:
            return self._decorate(self.session.snapshot())

    # -- clients -------------------------------------------------------------

    def _accept_loop(self):
        assert self._listener is not None
        # accept() blocked in another thread does not wake when the listener
        # closes, so poll with a timeout instead of blocking forever
        self._listener.settimeout(0.25)
        while not self._stopping.is_set():
            try:
                conn, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            thread = threading.Thread(
                target=self._client_main, args=(conn,), name="grafcet-client", daemon=True
            )
            thread.start()
            self._threads.append(thread)

    def _client_main(self, conn: socket.socket):
        client = None
        try:
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            head = self._sniff(conn)
            if head is None:
                conn.close()
                return
            if head.startswith(b"GET "):
                rest = self._websocket_handshake(conn, head)
                if rest is None:
                    conn.close()
                    return
                client = _Client(conn, "websocket")
                initial = rest
            else:
                client = _Client(conn, "ndjson")
                initial = head
            self._register(client)
            client.enqueue_snapshot(self._snapshot())
            if client.kind == "websocket":
                self._read_websocket(client, initial)
            else:
                self._read_ndjson(client, initial)
        except (OSError, wsframe.WsProtocolError):
            pass
        finally:
            if client is not None:
                self._drop_client(client)
            else:
                try:
                    conn.close()
                except OSError:
                    pass

    def _sniff(self, conn: socket.socket) -> "bytes | None":
        """First bytes of the connection, to tell a WebSocket upgrade from raw
        NDJSON. WebSocket clients speak first, so a short silence means a raw
        client that is just listening; returns b"" then (None on disconnect)."""
        deadline = time.monotonic() + 0.25
        head = b""
        while len(head) < 4 and (not head or b"GET ".startswith(head)):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            conn.settimeout(remaining)
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                break
            if not chunk:
                return None if not head else head
            head += chunk
        conn.settimeout(None)
        return head

    def _websocket_handshake(self, conn: socket.socket, head: bytes) -> "bytes | None":
        data = bytearray(head)
        while b"\r\n\r\n" not in data:
            if len(data) > 65536:
                return None
            chunk = conn.recv(4096)
            if not chunk:
                return None
            data += chunk
        raw, _, rest = bytes(data).partition(b"\r\n\r\n")
        key = None
        for line in raw.decode("latin-1").split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if not key:
            conn.sendall(wsframe.handshake_reject("missing Sec-WebSocket-Key"))
            return None
        conn.sendall(wsframe.handshake_response(key))
        return rest

    def _register(self, client: _Client):
        with self._clients_lock:
            self._clients.append(client)
        thread = threading.Thread(
            target=self._write_loop, args=(client,), name="grafcet-writer", daemon=True
        )
        thread.start()
        self._threads.append(thread)

    def _drop_client(self, client: _Client):
        client.mark_closed()
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
        try:
            client.sock.close()
        except OSError:
            pass

    def _read_ndjson(self, client: _Client, initial: bytes):
        buf = bytearray(initial)
        while not self._stopping.is_set():
            while b"\n" in buf:
                line, _, rest = bytes(buf).partition(b"\n")
                buf = bytearray(rest)
                text = line.decode("utf-8", errors="replace").strip()
                if text:
                    self._handle_text(client, text)
            if len(buf) > MAX_LINE:
                raise OSError("oversized line")
            chunk = client.sock.recv(4096)
            if not chunk:
                return
            buf += chunk

    def _read_websocket(self, client: _Client, initial: bytes):
        decoder = wsframe.FrameDecoder()
        pending = decoder.feed(initial)
        while not self._stopping.is_set():
            for kind, payload in pending:
                if kind == "text":
                    self._handle_text(client, payload.decode("utf-8", errors="replace"))
                elif kind == "ping":
                    client.enqueue_control({"_raw": wsframe.encode_pong(payload)})
                elif kind == "close":
                    # reply synchronously: returning tears the socket down, so
                    # a queued reply could be dropped before the writer runs
                    try:
                        client.send_bytes(wsframe.encode_close())
                    except OSError:
                        pass
                    return
                # binary and pong frames are ignored
            chunk = client.sock.recv(4096)
            if not chunk:
                return
            pending = decoder.feed(chunk)

    # -- message handling ------------------------------------------------------

    def _handle_text(self, client: _Client, text: str):
        try:
            msg = json.loads(text)
        except ValueError:
            client.enqueue_control({"t": "error", "message": "invalid JSON"})
            return
        if not isinstance(msg, dict) or msg.get("t") != "cmd":
            client.enqueue_control(
                {"t": "error", "message": 'expected an object with "t": "cmd"'}
            )
            return
        cmd_id = msg.get("id")
        with self._lock:
            ok, reason = self._apply_locked(msg)
            scan_index = self.session.scan_index
            snap = self._decorate(self.session.snapshot()) if ok else None
        if ok:
            client.enqueue_control({"t": "ack", "id": cmd_id, "scan_index": scan_index})
            self._broadcast_snapshot(snap)
        else:
            client.enqueue_control({"t": "reject", "id": cmd_id, "reason": reason})

    def _apply_locked(self, msg: dict) -> "tuple[bool, str | None]":
        action = msg.get("action")
        if action == "pause":
            self._paused = True
            return True, None
        if action == "resume":
            self._paused = False
            return True, None
        if action == "set_speed":
            value = msg.get("value")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return False, "value must be a number"
            value = float(value)
            if not (MIN_SPEED <= value <= MAX_SPEED):
                return False, f"speed must be within [{MIN_SPEED}, {MAX_SPEED}]"
            self._speed = value
            return True, None
        return self.session.apply(msg)

    # -- outbound ---------------------------------------------------------------

    def _broadcast_snapshot(self, snap: dict):
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.enqueue_snapshot(snap)

    def _broadcast_control(self, msg: dict):
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.enqueue_control(msg)

    def _write_loop(self, client: _Client):
        min_interval = 1.0 / MAX_SNAPSHOTS_PER_SECOND
        while True:
            batch: list = []
            with client.cond:
                while True:
                    if client.closed:
                        return
                    now = time.monotonic()
                    snapshot_due = (
                        client.pending_snapshot is not None and now >= client.next_snapshot_at
                    )
                    if client.control or snapshot_due:
                        break
                    timeout = None
                    if client.pending_snapshot is not None:
                        timeout = max(0.0, client.next_snapshot_at - now)
                    client.cond.wait(timeout)
                batch.extend(client.control)
                client.control.clear()
                if client.pending_snapshot is not None and time.monotonic() >= client.next_snapshot_at:
                    batch.append(client.pending_snapshot)
                    client.pending_snapshot = None
                    client.next_snapshot_at = time.monotonic() + min_interval
            try:
                for msg in batch:
                    if "_raw" in msg and len(msg) == 1:
                        client.send_bytes(msg["_raw"])
                    else:
                        client.send_bytes(client.encode(msg))
            except OSError:
                self._drop_client(client)
                return
