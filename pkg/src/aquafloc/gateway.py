"""Network edge: TCP line ingest, HTTP API, live event stream, tick loop.

One GatewayServer owns the store, the classifier, and the actuator
states. All state mutation (ingest appends, control ticks, operator
overrides) funnels through a single lock, so ticks and overrides never
interleave halfway. HTTP requests are served on their own threads and
stay responsive while a tick runs.

The HTTP API listens on the configured address; the line-oriented
ingest socket listens on the next port up (or its own ephemeral port
when the HTTP port is 0).
"""

from __future__ import annotations

import json
import queue
import socketserver
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import urlparse, parse_qs

from .control import control_tick
from .dtree import DecisionTree, predict, reference_tree
from .model import (
    ActuatorId,
    ActuatorMode,
    ActuatorState,
    AppConfig,
    ValidationError,
    WaterSample,
    initial_actuator_states,
    parse_listen_addr,
    validate_sample,
)
from .store import InvalidRange, NoData, OutOfOrder, StoredRecord, TelemetryStore

MAX_LINE_BYTES = 4096

_MODE_BY_WIRE = {mode.value: mode for mode in ActuatorMode}


class GatewayServer:
    """Serves the API, ingests samples, and runs the periodic control tick.

    ``auto_tick=False`` disables the background tick thread; callers
    then drive ticks explicitly with tick_once() (deterministic tests,
    replays).
    """

    def __init__(
        self,
        config: AppConfig | None = None,
        store: TelemetryStore | None = None,
        tree: DecisionTree | None = None,
        auto_tick: bool = True,
    ):
        self._config = config or AppConfig()
        self._store = store if store is not None else TelemetryStore.open(self._config.store_path)
        self._owns_store = store is None
        self._tree = tree if tree is not None else reference_tree()

        self._lock = threading.RLock()
        self._states = initial_actuator_states(int(time.time() * 1000))
        self._last_report = None
        self._last_decision = None

        self._subs_lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []

        self._stop = threading.Event()
        self._auto_tick = auto_tick
        self._threads: list[threading.Thread] = []

        host, port = parse_listen_addr(self._config.listen_addr)
        self._http = _GatewayHTTPServer((host, port), _HttpHandler, self)
        ingest_port = 0 if port == 0 else port + 1
        self._ingest = _IngestServer((host, ingest_port), _IngestHandler, self)

    # -- lifecycle ---------------------------------------------------

    @property
    def http_address(self) -> tuple[str, int]:
        return self._http.server_address[0], self._http.server_address[1]

    @property
    def ingest_address(self) -> tuple[str, int]:
        return self._ingest.server_address[0], self._ingest.server_address[1]

    @property
    def stopping(self) -> bool:
        return self._stop.is_set()

    def start(self) -> "GatewayServer":
        threads = [
            threading.Thread(target=self._http.serve_forever, name="gateway-http", daemon=True),
            threading.Thread(target=self._ingest.serve_forever, name="gateway-ingest", daemon=True),
        ]
        if self._auto_tick:
            threads.append(threading.Thread(target=self._tick_loop, name="gateway-tick", daemon=True))
        for t in threads:
            t.start()
        self._threads = threads
        return self

    def stop(self) -> None:
        self._stop.set()
        self._http.shutdown()
        self._ingest.shutdown()
        self._http.server_close()
        self._ingest.server_close()
        with self._subs_lock:
            for q in self._subscribers:
                q.put(None)
            self._subscribers.clear()
        for t in self._threads:
            t.join(timeout=5)
        if self._owns_store:
            self._store.close()

    def __enter__(self) -> "GatewayServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

    # -- control loop ------------------------------------------------

    def _tick_loop(self) -> None:
        period = self._config.tick_ms / 1000.0
        while not self._stop.wait(period):
            self.tick_once()

    def tick_once(self, now_ms: int | None = None):
        """Run one control tick; no-op (returns None) while the store is empty."""
        with self._lock:
            try:
                report = control_tick(
                    self._store,
                    self._tree,
                    self._states,
                    self._config.control_thresholds,
                    now_ms=now_ms if now_ms is not None else int(time.time() * 1000),
                )
            except NoData:
                return None
            self._states = list(report.applied_states)
            self._last_report = report
            self._last_decision = report.decision
            self._broadcast("tick", report.to_json_dict())
        return report

    # -- ingest ------------------------------------------------------

    def handle_ingest_line(self, line: str) -> dict[str, Any]:
        """Parse, validate, and append one frame; always answers, never raises."""
        if len(line.encode("utf-8", errors="replace")) > MAX_LINE_BYTES:
            return {"status": "reject", "reason": "line_too_long", "detail": f"limit is {MAX_LINE_BYTES} bytes"}
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            return {"status": "reject", "reason": "parse_error", "detail": str(e)}
        try:
            sample = WaterSample.from_json_dict(data)
        except ValueError as e:
            return {"status": "reject", "reason": "parse_error", "detail": str(e)}
        try:
            validate_sample(sample)
        except ValidationError as e:
            return {"status": "reject", "reason": "validation", "field": e.field, "detail": str(e)}
        with self._lock:
            try:
                seq = self._store.append(sample)
            except OutOfOrder as e:
                return {"status": "reject", "reason": "out_of_order", "detail": str(e)}
            self._broadcast("sample", StoredRecord(seq, sample).to_json_dict())
        return {"status": "ack", "seq": seq}

    # -- queries (HTTP handler delegates here) -------------------------

    def snapshot(self) -> dict[str, Any]:
        """Latest sample + condition + actuators; raises NoData when empty.

        ``stale`` is set when the last tick classified an older sample
        than the store now holds (or no tick has run yet).
        """
        with self._lock:
            record = self._store.latest()
            report = self._last_report
            stale = report is None or report.sample.ts != record.sample.ts
            tick_summary = None
            if report is not None:
                tick_summary = {
                    "ts": report.sample.ts,
                    "condition": report.condition.value,
                    "fired_rules": list(report.decision.fired_rules),
                    "elapsed_ms": report.elapsed_ms,
                }
            return {
                "sample": record.to_json_dict(),
                "condition": report.condition.value if report is not None else None,
                "actuators": [s.to_json_dict() for s in self._states],
                "tick": tick_summary,
                "stale": stale,
            }

    def condition_now(self) -> dict[str, Any]:
        """Classify the latest sample on demand; raises NoData when empty."""
        with self._lock:
            record = self._store.latest()
        value, condition = predict(self._tree, *record.sample.features())
        return {"condition": condition.value, "value": value, "ts": record.sample.ts}

    def history(self, from_ts: int, to_ts: int) -> list[dict[str, Any]]:
        return [r.to_json_dict() for r in self._store.range(from_ts, to_ts)]

    def actuator_states(self) -> list[dict[str, Any]]:
        with self._lock:
            return [s.to_json_dict() for s in self._states]

    def set_override(self, actuator_name: str, mode_name: str) -> dict[str, Any]:
        """Apply an operator override immediately, preserving state invariants.

        Raises KeyError for an unknown actuator (HTTP 404) and
        ValueError for an unknown mode (HTTP 400).
        """
        actuator = ActuatorId.from_wire(actuator_name)  # KeyError -> 404
        mode = _MODE_BY_WIRE.get(mode_name)
        if mode is None:
            raise ValueError(f"mode must be one of {sorted(_MODE_BY_WIRE)}, got {mode_name!r}")
        with self._lock:
            index = next(i for i, s in enumerate(self._states) if s.id is actuator)
            old = self._states[index]
            if mode is ActuatorMode.FORCED_ON:
                effective = True
            elif mode is ActuatorMode.FORCED_OFF:
                effective = False
            elif self._last_decision is not None:
                effective = bool(self._last_decision.commands[actuator])
            else:
                effective = old.effective
            now = int(time.time() * 1000)
            changed = effective != old.effective
            new = ActuatorState(actuator, mode, effective, now if changed else old.last_changed)
            self._states[index] = new
            return new.to_json_dict()

    # -- event stream --------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._subs_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subs_lock:
            try:
                self._subscribers.remove(q)
            except ValueError:
                pass

    def _broadcast(self, event: str, payload: dict[str, Any]) -> None:
        message = (event, json.dumps(payload))
        with self._subs_lock:
            for q in self._subscribers:
                q.put(message)


class _GatewayHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, handler, gateway: GatewayServer):
        super().__init__(addr, handler)
        self.gateway = gateway


class _IngestServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, handler, gateway: GatewayServer):
        super().__init__(addr, handler)
        self.gateway = gateway


class _IngestHandler(socketserver.StreamRequestHandler):
    """One connection, many newline-delimited JSON frames, one reply per frame.

    A bad frame gets a reject reply; the connection itself survives
    everything except the peer going away.
    """

    server: _IngestServer

    def handle(self):
        gateway = self.server.gateway
        while not gateway.stopping:
            try:
                raw = self.rfile.readline(MAX_LINE_BYTES + 2)
            except (ConnectionResetError, OSError):
                return
            if not raw:
                return
            if not raw.endswith(b"\n") and len(raw) > MAX_LINE_BYTES:
                # Oversized frame: drain to the next newline so the
                # stream stays in sync, then reject just once.
                while True:
                    chunk = self.rfile.readline(MAX_LINE_BYTES + 2)
                    if not chunk or chunk.endswith(b"\n"):
                        break
                response = {
                    "status": "reject",
                    "reason": "line_too_long",
                    "detail": f"limit is {MAX_LINE_BYTES} bytes",
                }
            else:
                try:
                    line = raw.decode("utf-8")
                except UnicodeDecodeError:
                    response = {"status": "reject", "reason": "parse_error", "detail": "invalid utf-8"}
                else:
                    response = gateway.handle_ingest_line(line.strip("\r\n"))
            try:
                self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
                self.wfile.flush()
            except (BrokenPipeError, OSError):
                return


class _HttpHandler(BaseHTTPRequestHandler):
    server: _GatewayHTTPServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, code: int, payload: Any) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        gateway = self.server.gateway
        url = urlparse(self.path)
        path = url.path.rstrip("/") or "/"
        try:
            if path == "/api/v1/latest":
                self._send_json(200, gateway.snapshot())
            elif path == "/api/v1/condition":
                self._send_json(200, gateway.condition_now())
            elif path == "/api/v1/actuators":
                self._send_json(200, {"actuators": gateway.actuator_states()})
            elif path == "/api/v1/history":
                self._handle_history(url.query, gateway)
            elif path == "/api/v1/stream":
                self._handle_stream(gateway)
            elif path == "/":
                self._send_json(200, {
                    "service": "aquafloc-gateway",
                    "endpoints": [
                        "/api/v1/latest",
                        "/api/v1/condition",
                        "/api/v1/actuators",
                        "/api/v1/history?from&to",
                        "/api/v1/stream",
                        "POST /api/v1/ingest",
                        "POST /api/v1/actuators/{id}",
                    ],
                })
            else:
                self._send_json(404, {"error": "not_found", "path": path})
        except NoData:
            self._send_json(503, {"error": "no_data"})
        except (BrokenPipeError, ConnectionResetError):
            pass

    def _handle_history(self, query: str, gateway: GatewayServer) -> None:
        params = parse_qs(query)
        try:
            from_ts = int(params["from"][0]) if "from" in params else 0
            to_ts = int(params["to"][0]) if "to" in params else 2**62
        except ValueError:
            self._send_json(400, {"error": "bad_range", "detail": "from/to must be integers"})
            return
        try:
            records = gateway.history(from_ts, to_ts)
        except InvalidRange as e:
            self._send_json(400, {"error": "bad_range", "detail": str(e)})
            return
        self._send_json(200, {"records": records, "count": len(records)})

    def _handle_stream(self, gateway: GatewayServer) -> None:
        q = gateway.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            while not gateway.stopping:
                try:
                    item = q.get(timeout=0.5)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                if item is None:
                    break
                event, data = item
                self.wfile.write(f"event: {event}\ndata: {data}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            gateway.unsubscribe(q)

    def do_POST(self):
        gateway = self.server.gateway
        path = urlparse(self.path).path.rstrip("/")
        try:
            length = int(self.headers.get("Content-Length") or 0)
        except ValueError:
            length = 0
        body = self.rfile.read(length).decode("utf-8", errors="replace")

        if path == "/api/v1/ingest":
            response = gateway.handle_ingest_line(body.strip())
            self._send_json(200 if response["status"] == "ack" else 400, response)
            return

        prefix = "/api/v1/actuators/"
        if path.startswith(prefix):
            actuator_name = path[len(prefix):]
            try:
                data = json.loads(body)
                mode_name = data["mode"] if isinstance(data, dict) and "mode" in data else None
            except json.JSONDecodeError:
                mode_name = None
            if not isinstance(mode_name, str):
                self._send_json(400, {"error": "bad_mode", "detail": 'body must be {"mode": "auto"|"on"|"off"}'})
                return
            try:
                state = gateway.set_override(actuator_name, mode_name)
            except KeyError:
                self._send_json(404, {"error": "unknown_actuator", "actuator": actuator_name})
                return
            except ValueError as e:
                self._send_json(400, {"error": "bad_mode", "detail": str(e)})
                return
            self._send_json(200, state)
            return

        self._send_json(404, {"error": "not_found", "path": path})
