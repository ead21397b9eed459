"""Ingress wire format, TCP listener, replay files.

One frame per line, comma-separated UTF-8 text:

    v=1,t=<int>,h=<L|R>,s=<0|1>,<63 coordinates x0,y0,z0,...,x20,y20,z20>

Coordinates are serialized with ``repr(float)`` so decode(encode(f)) is
bit-identical to f. Replay files use the same line format preceded by a
one-line header:

    #gestop-replay v=1 label=<name|-> fps=<int|->

so captured wire logs double as replay files.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .core import (
    FrameError,
    Handedness,
    KeypointFrame,
    NUM_LANDMARKS,
    validate_frame,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_INGRESS_PORT = 5556
INGRESS_QUEUE_CAPACITY = 256

_N_COORDS = NUM_LANDMARKS * 3
_N_FIELDS = 4 + _N_COORDS


class WireError(ValueError):
    pass


class MalformedRecord(WireError):
    pass


class UnsupportedSchemaVersion(WireError):
    pass


class BindFailure(OSError):
    pass


def encode_frame(frame: KeypointFrame) -> bytes:
    """Serialize a valid frame to one newline-terminated record."""
    coords = ",".join(
        repr(float(c)) for point in frame.landmarks for c in point
    )
    line = (
        f"v={SCHEMA_VERSION},t={frame.timestamp_ms},h={frame.handedness.value},"
        f"s={1 if frame.signal else 0},{coords}\n"
    )
    return line.encode("utf-8")


def decode_frame(line: bytes | str) -> KeypointFrame:
    """Parse one wire record into a validated frame."""
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    parts = line.strip().split(",")
    if len(parts) != _N_FIELDS:
        raise MalformedRecord(
            f"expected {_N_FIELDS} comma-separated fields, got {len(parts)}"
        )
    version = _field(parts[0], "v")
    try:
        version_num = int(version)
    except ValueError:
        raise MalformedRecord(f"unparseable schema version {version!r}") from None
    if version_num != SCHEMA_VERSION:
        raise UnsupportedSchemaVersion(f"schema version {version_num}")
    try:
        t = int(_field(parts[1], "t"))
    except ValueError:
        raise MalformedRecord(f"unparseable timestamp {parts[1]!r}") from None
    h = _field(parts[2], "h")
    if h not in ("L", "R"):
        raise MalformedRecord(f"handedness must be L or R, got {h!r}")
    s = _field(parts[3], "s")
    if s not in ("0", "1"):
        raise MalformedRecord(f"signal must be 0 or 1, got {s!r}")
    try:
        values = [float(p) for p in parts[4:]]
    except ValueError:
        raise MalformedRecord("unparseable coordinate") from None
    landmarks = [tuple(values[i : i + 3]) for i in range(0, _N_COORDS, 3)]
    try:
        return validate_frame(landmarks, Handedness(h), t, signal=(s == "1"))
    except FrameError as exc:
        raise MalformedRecord(str(exc)) from exc


def _field(part: str, key: str) -> str:
    prefix = key + "="
    if not part.startswith(prefix):
        raise MalformedRecord(f"expected field {key}=..., got {part!r}")
    return part[len(prefix):]


# ── Replay files ──────────────────────────────────────────────────────

_HEADER_PREFIX = "#gestop-replay"


@dataclass(frozen=True)
class ReplayHeader:
    schema_version: int = SCHEMA_VERSION
    label: str | None = None
    fps: int | None = None

    def to_line(self) -> str:
        label = self.label if self.label else "-"
        fps = str(self.fps) if self.fps else "-"
        return f"{_HEADER_PREFIX} v={self.schema_version} label={label} fps={fps}\n"


@dataclass(frozen=True)
class ReplayFile:
    """Header plus ordered frames; timestamps non-decreasing."""

    header: ReplayHeader
    frames: tuple[KeypointFrame, ...]

    def __len__(self) -> int:
        return len(self.frames)


def parse_header(line: str) -> ReplayHeader:
    parts = line.strip().split()
    if not parts or parts[0] != _HEADER_PREFIX:
        raise MalformedRecord(f"bad replay header: {line.strip()!r}")
    fields = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
    try:
        version = int(fields["v"])
    except (KeyError, ValueError):
        raise MalformedRecord(f"bad replay header: {line.strip()!r}") from None
    if version != SCHEMA_VERSION:
        raise UnsupportedSchemaVersion(f"replay schema version {version}")
    label = fields.get("label", "-")
    fps = fields.get("fps", "-")
    return ReplayHeader(
        schema_version=version,
        label=None if label == "-" else label,
        fps=None if fps == "-" else int(fps),
    )


def write_replay(path: str | Path, frames: Iterable[KeypointFrame],
                 label: str | None = None, fps: int | None = None) -> int:
    """Write frames to a replay file; returns the frame count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "wb") as f:
        f.write(ReplayHeader(label=label, fps=fps).to_line().encode("utf-8"))
        for frame in frames:
            f.write(encode_frame(frame))
            n += 1
    return n


def read_replay(path: str | Path) -> ReplayFile:
    """Parse a replay file, enforcing non-decreasing timestamps."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first:
            raise MalformedRecord(f"{path}: empty file, missing header")
        header = parse_header(first)
        frames: list[KeypointFrame] = []
        prev_t = None
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                frame = decode_frame(line)
            except WireError as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from None
            if prev_t is not None and frame.timestamp_ms < prev_t:
                raise MalformedRecord(
                    f"{path}:{lineno}: timestamp {frame.timestamp_ms} decreases "
                    f"(previous {prev_t})"
                )
            prev_t = frame.timestamp_ms
            frames.append(frame)
    return ReplayFile(header, tuple(frames))


def replay(
    file: ReplayFile | str | Path,
    sink: Callable[[KeypointFrame], None],
    speed: float | str = "max",
) -> int:
    """Deliver a replay file's frames to ``sink`` in order.

    ``speed`` is a wall-clock multiplier (2.0 = twice as fast) or "max"
    for no sleeping. Returns the number of frames delivered.
    """
    if not isinstance(file, ReplayFile):
        file = read_replay(file)
    if speed != "max":
        speed = float(speed)
        if speed <= 0:
            raise ValueError("speed must be positive or 'max'")
    prev_t = None
    count = 0
    for frame in file.frames:
        if speed != "max" and prev_t is not None:
            dt_s = (frame.timestamp_ms - prev_t) / 1000.0 / speed
            if dt_s > 0:
                time.sleep(dt_s)
        prev_t = frame.timestamp_ms
        sink(frame)
        count += 1
    return count


def iter_frames(file: ReplayFile) -> Iterator[KeypointFrame]:
    return iter(file.frames)


# ── TCP ingress ───────────────────────────────────────────────────────


@dataclass
class IngressStats:
    frames: int = 0
    malformed: int = 0
    rejected_connections: int = 0


class IngressListener:
    """Accepts one producer connection at a time on a TCP port.

    Each decoded frame is handed to ``sink`` in arrival order; the call
    blocks when downstream applies backpressure, which pauses the socket
    read loop. Malformed lines are counted and skipped with a warning.
    A second concurrent producer is rejected while the first is active.
    """

    def __init__(self, port: int, sink: Callable[[KeypointFrame], None],
                 host: str = "127.0.0.1") -> None:
        self.sink = sink
        self.stats = IngressStats()
        self._active = threading.Lock()  # held while a producer is connected
        self._shutdown = threading.Event()
        try:
            self._server = socketserver.ThreadingTCPServer(
                (host, port), self._make_handler(), bind_and_activate=False
            )
            self._server.allow_reuse_address = True
            self._server.daemon_threads = True
            self._server.server_bind()
            self._server.server_activate()
        except OSError as exc:
            raise BindFailure(f"cannot bind ingress port {port}: {exc}") from exc
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="ingress-accept", daemon=True
        )

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "IngressListener":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._shutdown.set()
        self._server.shutdown()
        self._server.server_close()

    def _make_handler(self):
        listener = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self) -> None:
                if not listener._active.acquire(blocking=False):
                    listener.stats.rejected_connections += 1
                    log.warning("rejecting second producer connection")
                    return  # close immediately: single-producer contract
                try:
                    for line in self.rfile:
                        if listener._shutdown.is_set():
                            break
                        if not line.strip():
                            continue
                        try:
                            frame = decode_frame(line)
                        except WireError as exc:
                            listener.stats.malformed += 1
                            log.warning("skipping malformed line: %s", exc)
                            continue
                        listener.sink(frame)
                        listener.stats.frames += 1
                finally:
                    listener._active.release()

        return Handler


def send_frames(
    port: int,
    frames: Iterable[KeypointFrame],
    speed: float | str = "max",
    host: str = "127.0.0.1",
) -> int:
    """Connect to an ingress port and stream frames at the given speed."""
    n = 0
    with socket.create_connection((host, port)) as sock:
        prev_t = None
        for frame in frames:
            if speed != "max" and prev_t is not None:
                dt_s = (frame.timestamp_ms - prev_t) / 1000.0 / float(speed)
                if dt_s > 0:
                    time.sleep(dt_s)
            prev_t = frame.timestamp_ms
            sock.sendall(encode_frame(frame))
            n += 1
    return n
