"""Control and monitoring plane: HTTP endpoints plus a WebSocket event
stream, served from one port.

HTTP API (JSON bodies):
    GET  /config          current gesture->action mapping
    PUT  /config          validate and hot-swap the mapping
    GET  /labels          {"static": [...], "dynamic": [...]}
    GET  /status          counters and state snapshot
    POST /record/start    {"kind": "static"|"dynamic", "label": str}
    POST /record/stop     stop recording, returns the sample count
    POST /retrain         {"kind": ...}; synchronous, progress on the WS
    POST /signal          {"on": bool} forces the segmentation flag on
                          subsequent ingress frames

WS   /events streams JSON messages mirrored from the pipeline:
    {"type":"frame"|"cursor"|"gesture"|"training"|"status", ...}

The WebSocket side is a minimal RFC 6455 server (text frames, ping/pong,
close); subscribers are bounded drop-oldest queues so a stalled browser
can never slow the frame path.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import queue
import socket
import struct
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

log = logging.getLogger(__name__)

DEFAULT_CONTROL_PORT = 8765
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

SUBSCRIBER_QUEUE_SIZE = 256


class Broadcast:
    """Fan-out hub; slow subscribers drop their oldest message."""

    def __init__(self) -> None:
        self._subs: list[queue.Queue] = []
        self._lock = threading.Lock()
        self.dropped = 0

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_QUEUE_SIZE)
        with self._lock:
            self._subs.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            try:
                self._subs.remove(q)
            except ValueError:
                pass

    def publish(self, message: dict) -> None:
        data = json.dumps(message, separators=(",", ":"))
        with self._lock:
            subs = list(self._subs)
        for q in subs:
            try:
                q.put_nowait(data)
            except queue.Full:
                try:
                    q.get_nowait()  # drop oldest, keep the stream current
                    self.dropped += 1
                    q.put_nowait(data)
                except (queue.Empty, queue.Full):
                    pass


# ── WebSocket framing ─────────────────────────────────────────────────


def _ws_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(payload: str) -> bytes:
    data = payload.encode("utf-8")
    n = len(data)
    if n < 126:
        header = struct.pack("!BB", 0x81, n)
    elif n <= 0xFFFF:
        header = struct.pack("!BBH", 0x81, 126, n)
    else:
        header = struct.pack("!BBQ", 0x81, 127, n)
    return header + data


def _ws_encode_control(opcode: int, payload: bytes = b"") -> bytes:
    return struct.pack("!BB", 0x80 | opcode, len(payload)) + payload


def _read_exact(rfile, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = rfile.read(n - len(buf))
        if not chunk:
            raise ConnectionError("websocket client closed")
        buf += chunk
    return buf


def ws_read_frame(rfile) -> tuple[int, bytes]:
    """One client frame -> (opcode, unmasked payload)."""
    b1, b2 = _read_exact(rfile, 2)
    opcode = b1 & 0x0F
    masked = bool(b2 & 0x80)
    length = b2 & 0x7F
    if length == 126:
        (length,) = struct.unpack("!H", _read_exact(rfile, 2))
    elif length == 127:
        (length,) = struct.unpack("!Q", _read_exact(rfile, 8))
    mask = _read_exact(rfile, 4) if masked else b""
    payload = _read_exact(rfile, length) if length else b""
    if masked and payload:
        payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
    return opcode, payload


# ── HTTP server ───────────────────────────────────────────────────────


class ControlServer:
    """HTTP/WS control plane bound to its own port.

    ``api`` is the daemon-facing surface; see Daemon.control_api for the
    expected callables.
    """

    def __init__(self, api: dict, events: Broadcast, port: int = DEFAULT_CONTROL_PORT,
                 host: str = "127.0.0.1", static_dir: str | Path | None = None) -> None:
        self.api = api
        self.events = events
        self.static_dir = Path(static_dir) if static_dir else None
        handler = self._make_handler()
        self._server = ThreadingHTTPServer((host, port), handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="control-plane", daemon=True
        )

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "ControlServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def _make_handler(self):
        control = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):  # route through logging
                log.debug("control: " + fmt, *args)

            # ── helpers ───────────────────────────────────────────

            def _json(self, status: int, obj) -> None:
                body = json.dumps(obj).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)

            def _read_body(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b""
                if not raw:
                    return None
                return json.loads(raw.decode("utf-8"))

            # ── routes ────────────────────────────────────────────

            def do_GET(self) -> None:
                if self.path == "/events":
                    self._serve_websocket()
                elif self.path == "/config":
                    self._json(200, control.api["get_mapping"]())
                elif self.path == "/labels":
                    self._json(200, control.api["get_labels"]())
                elif self.path == "/status":
                    self._json(200, control.api["get_status"]())
                else:
                    self._serve_static()

            def do_PUT(self) -> None:
                if self.path != "/config":
                    self._json(404, {"error": "not found"})
                    return
                try:
                    body = self._read_body()
                    result = control.api["put_mapping"](body)
                except (ValueError, json.JSONDecodeError) as exc:
                    self._json(400, {"error": str(exc)})
                    return
                self._json(200, result)

            def do_POST(self) -> None:
                try:
                    body = self._read_body()
                except json.JSONDecodeError as exc:
                    self._json(400, {"error": f"bad JSON body: {exc}"})
                    return
                try:
                    if self.path == "/record/start":
                        self._json(200, control.api["record_start"](
                            str(body["kind"]), str(body["label"])))
                    elif self.path == "/record/stop":
                        self._json(200, control.api["record_stop"]())
                    elif self.path == "/retrain":
                        self._json(200, control.api["retrain"](str(body["kind"])))
                    elif self.path == "/signal":
                        on = _parse_signal_body(body)
                        self._json(200, control.api["set_signal"](on))
                    else:
                        self._json(404, {"error": "not found"})
                except (KeyError, TypeError) as exc:
                    self._json(400, {"error": f"bad request: {exc}"})
                except ValueError as exc:
                    self._json(400, {"error": str(exc)})

            def do_OPTIONS(self) -> None:
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods",
                                 "GET, PUT, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

            # ── static dashboard bundle ───────────────────────────

            def _serve_static(self) -> None:
                root = control.static_dir
                rel = self.path.lstrip("/") or "index.html"
                if root is not None:
                    target = (root / rel).resolve()
                    if str(target).startswith(str(root.resolve())) and target.is_file():
                        data = target.read_bytes()
                        ctype = _content_type(target.suffix)
                        self.send_response(200)
                        self.send_header("Content-Type", ctype)
                        self.send_header("Content-Length", str(len(data)))
                        self.end_headers()
                        self.wfile.write(data)
                        return
                if self.path in ("/", "/index.html"):
                    body = (b"<html><body><h1>gestop daemon</h1>"
                            b"<p>No dashboard bundle found. API is live: "
                            b"<a href='/status'>/status</a></p></body></html>")
                    self.send_response(200)
                    self.send_header("Content-Type", "text/html")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                self._json(404, {"error": "not found"})

            # ── websocket event stream ────────────────────────────

            def _serve_websocket(self) -> None:
                key = self.headers.get("Sec-WebSocket-Key")
                if (self.headers.get("Upgrade", "").lower() != "websocket"
                        or not key):
                    self._json(400, {"error": "expected websocket upgrade"})
                    return
                self.send_response(101, "Switching Protocols")
                self.send_header("Upgrade", "websocket")
                self.send_header("Connection", "Upgrade")
                self.send_header("Sec-WebSocket-Accept", _ws_accept_key(key))
                self.end_headers()
                self.close_connection = True

                conn: socket.socket = self.connection
                sub = control.events.subscribe()
                done = threading.Event()
                write_lock = threading.Lock()

                def reader() -> None:
                    try:
                        while not done.is_set():
                            opcode, payload = ws_read_frame(self.rfile)
                            if opcode == 0x8:  # close
                                break
                            if opcode == 0x9:  # ping -> pong
                                with write_lock:
                                    conn.sendall(_ws_encode_control(0xA, payload))
                    except (ConnectionError, OSError, struct.error):
                        pass
                    finally:
                        done.set()

                threading.Thread(target=reader, name="ws-reader",
                                 daemon=True).start()
                try:
                    control.api["on_ws_connect"]()
                    while not done.is_set():
                        try:
                            msg = sub.get(timeout=0.25)
                        except queue.Empty:
                            continue
                        with write_lock:
                            conn.sendall(ws_encode_text(msg))
                except (BrokenPipeError, ConnectionError, OSError):
                    pass
                finally:
                    done.set()
                    control.events.unsubscribe(sub)
                    control.api["on_ws_disconnect"]()

        return Handler


def _parse_signal_body(body) -> bool:
    # accepts {"on": true|false} and the bare strings "on"/"off"
    if isinstance(body, dict) and isinstance(body.get("on"), bool):
        return body["on"]
    if isinstance(body, str) and body in ("on", "off"):
        return body == "on"
    raise ValueError('signal body must be {"on": true|false}')


def _content_type(suffix: str) -> str:
    return {
        ".html": "text/html",
        ".js": "application/javascript",
        ".mjs": "application/javascript",
        ".css": "text/css",
        ".json": "application/json",
        ".png": "image/png",
        ".svg": "image/svg+xml",
        ".map": "application/json",
    }.get(suffix, "application/octet-stream")
