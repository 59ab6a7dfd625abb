"""HTTP observation and command service for a running loop.

Three endpoints on a stdlib threading server:

* ``GET /frames``  streams frames as newline-delimited JSON.  The stream is
  decimated to the configured frame rate, except that frames carrying
  applied events or errors are always published, so every accepted command
  is reflected in exactly one streamed frame.  ``?n=COUNT`` closes the
  stream after COUNT frames.
* ``POST /command``  accepts one command envelope per request.  Sequence
  numbers must be strictly increasing per client; replays are rejected with
  a structured ``stale_seq`` error and change nothing.
* ``GET /snapshot``  returns the loop configuration and calibration.

Observers only ever read published copies of frames; subscribing, lagging,
or disconnecting cannot perturb the simulation, whose trajectory depends
only on configuration, seed, and the accepted command sequence.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Tuple
from urllib.parse import parse_qs, urlparse

from .loop import FRAME_SCHEMA, LoopConfig, PolarizationLoop, event_from_dict

COMMAND_SCHEMA = 1
DEFAULT_FRAME_HZ = 30.0
DEFAULT_LOOP_HZ = 120.0
DEFAULT_QUEUE_DEPTH = 256


class _Subscriber:
    """One client's frame queue: bounded, dropping the oldest on overflow."""

    def __init__(self, depth: int) -> None:
        self.cond = threading.Condition()
        self.q: deque[str] = deque(maxlen=depth)
        self.dropped = 0

    def push(self, line: str) -> None:
        with self.cond:
            if self.q.maxlen is not None and len(self.q) == self.q.maxlen:
                self.dropped += 1
            self.q.append(line)
            self.cond.notify()

    def pop(self, timeout: float) -> Optional[str]:
        with self.cond:
            if not self.q:
                self.cond.wait(timeout)
            return self.q.popleft() if self.q else None


class FrameBus:
    """Fan-out of frame lines to any number of bounded subscriber queues."""

    def __init__(self, depth: int = DEFAULT_QUEUE_DEPTH) -> None:
        self._depth = depth
        self._lock = threading.Lock()
        self._subs: dict[int, _Subscriber] = {}
        self._next_id = 0

    def subscribe(self) -> Tuple[int, _Subscriber]:
        with self._lock:
            sid = self._next_id
            self._next_id += 1
            sub = _Subscriber(self._depth)
            self._subs[sid] = sub
            return sid, sub

    def unsubscribe(self, sid: int) -> None:
        with self._lock:
            self._subs.pop(sid, None)

    def publish(self, line: str) -> None:
        with self._lock:
            subs = list(self._subs.values())
        for sub in subs:
            sub.push(line)

    def count(self) -> int:
        with self._lock:
            return len(self._subs)


class LoopService:
    """Owns the loop, its pacing thread, and the frame fan-out."""

    def __init__(
        self,
        cfg: LoopConfig,
        frame_hz: float = DEFAULT_FRAME_HZ,
        loop_hz: float = DEFAULT_LOOP_HZ,
        queue_depth: int = DEFAULT_QUEUE_DEPTH,
    ) -> None:
        if frame_hz <= 0 or loop_hz <= 0:
            raise ValueError("frame_hz and loop_hz must be positive")
        self.cfg = cfg
        self.loop = PolarizationLoop(cfg)
        self.bus = FrameBus(queue_depth)
        self.decimate = max(1, round(loop_hz / frame_hz))
        self.loop_hz = loop_hz
        self.stop_event = threading.Event()
        self._seq_lock = threading.Lock()
        self._last_seq: dict[str, int] = {}
        self._ticker: Optional[threading.Thread] = None

    # -- loop side ----------------------------------------------------------

    def tick_once(self) -> None:
        frame = self.loop.tick()
        # decimate quiet frames; event- or error-bearing frames always go out
        if (frame.tick % self.decimate) == 0 or frame.applied or frame.errors:
            self.bus.publish(frame.to_json())

    def start_ticker(self) -> None:
        if self._ticker is not None:
            return

        def _run() -> None:
            interval = 1.0 / self.loop_hz
            next_t = time.monotonic()
            while not self.stop_event.is_set():
                self.tick_once()
                next_t += interval
                delay = next_t - time.monotonic()
                if delay > 0:
                    self.stop_event.wait(delay)
                else:
                    next_t = time.monotonic()

        self._ticker = threading.Thread(target=_run, name="loop-ticker", daemon=True)
        self._ticker.start()

    def stop(self) -> None:
        self.stop_event.set()
        if self._ticker is not None:
            self._ticker.join(timeout=2.0)
            self._ticker = None

    # -- command side --------------------------------------------------------

    def handle_command(self, body: dict) -> Tuple[int, dict]:
        """Validate one command envelope; returns (http_status, response)."""
        if not isinstance(body, dict):
            return 400, {"error": "bad_request", "detail": "body must be an object"}
        if body.get("schema") != COMMAND_SCHEMA:
            return 400, {
                "error": "bad_schema",
                "detail": f"expected schema {COMMAND_SCHEMA}",
            }
        client_id = body.get("client_id")
        seq = body.get("seq")
        if not isinstance(client_id, str) or not client_id:
            return 400, {"error": "bad_request", "detail": "client_id must be a string"}
        if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
            return 400, {"error": "bad_request", "detail": "seq must be an integer >= 1"}
        event_body = body.get("event")
        if not isinstance(event_body, dict):
            return 400, {"error": "bad_request", "detail": "event must be an object"}
        try:
            event = event_from_dict({**event_body, "client_id": client_id, "seq": seq})
        except (ValueError, TypeError) as err:
            return 400, {"error": "bad_request", "detail": str(err)}
        with self._seq_lock:
            last = self._last_seq.get(client_id, 0)
            if seq <= last:
                return 409, {
                    "error": "stale_seq",
                    "client_id": client_id,
                    "seq": seq,
                    "last_seq": last,
                }
            self._last_seq[client_id] = seq
            self.loop.submit(event)
        return 200, {"status": "accepted", "client_id": client_id, "seq": seq}

    def snapshot(self) -> dict:
        cfg = self.cfg
        return {
            "schema": FRAME_SCHEMA,
            "tick": self.loop.tick_count,
            "paused": self.loop.paused,
            "stage_count": cfg.stage_count,
            "profile": cfg.profile.name,
            "tick_dt_us": cfg.tick_dt_us,
            "target": [float(v) for v in self.loop.target],
            "reference_in": list(cfg.reference_in),
            "drift_sigma": self.loop.channel.sigma_drift,
            "pipeline_bits": cfg.pipeline.bits,
            "frame_decimation": self.decimate,
            "calibration": [
                {
                    "v_pi": c.v_pi,
                    "v_0": c.v_0,
                    "v_bias_a": c.v_bias_a,
                    "v_bias_c": c.v_bias_c,
                }
                for c in self.loop.cal_est
            ],
        }


class _Handler(BaseHTTPRequestHandler):
    # one service instance is attached to the server object
    protocol_version = "HTTP/1.0"

    @property
    def service(self) -> LoopService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt: str, *args) -> None:  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        data = (json.dumps(payload) + "\n").encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_OPTIONS(self) -> None:
        # CORS preflight for browser clients posting JSON commands
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        if parsed.path == "/snapshot":
            self._send_json(200, self.service.snapshot())
        elif parsed.path == "/frames":
            self._stream_frames(parsed.query)
        else:
            self._send_json(404, {"error": "not_found", "path": parsed.path})

    def _stream_frames(self, query: str) -> None:
        params = parse_qs(query)
        limit = None
        if "n" in params:
            try:
                limit = max(1, int(params["n"][0]))
            except ValueError:
                self._send_json(400, {"error": "bad_request", "detail": "n must be an integer"})
                return
        sid, sub = self.service.bus.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "application/x-ndjson")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            sent = 0
            while not self.service.stop_event.is_set():
                line = sub.pop(timeout=0.25)
                if line is None:
                    continue
                self.wfile.write(line.encode() + b"\n")
                self.wfile.flush()
                sent += 1
                if limit is not None and sent >= limit:
                    break
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.service.bus.unsubscribe(sid)

    def do_POST(self) -> None:
        parsed = urlparse(self.path)
        if parsed.path != "/command":
            self._send_json(404, {"error": "not_found", "path": parsed.path})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length > 0 else b""
            body = json.loads(raw.decode() or "null")
        except (ValueError, UnicodeDecodeError):
            self._send_json(400, {"error": "bad_request", "detail": "invalid JSON body"})
            return
        status, payload = self.service.handle_command(body)
        self._send_json(status, payload)


def make_http_server(service: LoopService, bind: Tuple[str, int]) -> ThreadingHTTPServer:
    httpd = ThreadingHTTPServer(bind, _Handler)
    httpd.daemon_threads = True
    httpd.service = service  # type: ignore[attr-defined]
    return httpd


def parse_bind(spec: str) -> Tuple[str, int]:
    """Split 'host:port' with a friendly error."""
    host, sep, port = spec.rpartition(":")
    if not sep or not host:
        raise ValueError(f"bind address must look like host:port, got {spec!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ValueError(f"bind port must be an integer, got {port!r}") from None


def serve(
    cfg: LoopConfig,
    bind: str = "127.0.0.1:8710",
    frame_hz: float = DEFAULT_FRAME_HZ,
    loop_hz: float = DEFAULT_LOOP_HZ,
) -> None:
    """Run the loop and the HTTP front door until interrupted."""
    service = LoopService(cfg, frame_hz=frame_hz, loop_hz=loop_hz)
    httpd = make_http_server(service, parse_bind(bind))
    service.start_ticker()
    try:
        httpd.serve_forever(poll_interval=0.2)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
        httpd.server_close()
