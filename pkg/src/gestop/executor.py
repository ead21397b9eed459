"""Gesture-to-action dispatch through a pluggable sink.

The mapping file is a JSON object: {"<gesture>": ["sh"|"py", "<target>"]}.
"py" targets resolve against the built-in action registry below (the
token is kept for config compatibility; there is no embedded
interpreter). "sh" targets are shell commands, spawned detached with a
30 s kill timeout so a hung script never wedges the frame path.

Every dispatched event produces exactly one JSONL record:
    {"ts": ..., "gesture": ..., "action_type": ..., "target": ..., "outcome": ...}

The default LoggingSink turns the whole pipeline into structured log
records, so end-to-end runs have no OS side effects; an OS-injection
sink can implement the same interface as an optional adapter.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from .core import CursorMove, GestureEvent

log = logging.getLogger(__name__)

SHELL_KILL_TIMEOUT_S = 30.0

ACTION_TYPES = ("sh", "py")
NO_FUNC = "no_func"

# Built-in "py" actions: config target -> (sink method, args)
BUILTIN_ACTIONS: dict[str, tuple[str, tuple]] = {
    "take_screenshot": ("take_screenshot", ()),
    "mouse_left_click": ("click", ("left",)),
    "mouse_right_click": ("click", ("right",)),
    "mouse_double_click": ("double_click", ()),
    "scroll_up": ("scroll", (1,)),
    "scroll_down": ("scroll", (-1,)),
    "key_escape": ("key_press", ("escape",)),
}


class MappingError(ValueError):
    pass


class UnknownActionType(MappingError):
    pass


class UnknownBuiltin(MappingError):
    pass


class ShellSpawnFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ActionMapping:
    """Validated gesture name -> (action_type, target) table."""

    entries: dict[str, tuple[str, str]]

    def get(self, gesture: str) -> tuple[str, str] | None:
        return self.entries.get(gesture)

    def to_json_obj(self) -> dict[str, list[str]]:
        return {name: [t, target] for name, (t, target) in self.entries.items()}


def parse_mapping(obj) -> ActionMapping:
    """Validate the raw JSON object form of a mapping."""
    if not isinstance(obj, dict):
        raise MappingError("mapping must be a JSON object")
    entries: dict[str, tuple[str, str]] = {}
    for name, value in obj.items():
        if not isinstance(name, str) or not name:
            raise MappingError(f"bad gesture name {name!r}")
        if (
            not isinstance(value, list)
            or len(value) != 2
            or not all(isinstance(v, str) for v in value)
        ):
            raise MappingError(
                f"{name}: entry must be a 2-element array [type, target]"
            )
        action_type, target = value
        if action_type not in ACTION_TYPES:
            raise UnknownActionType(
                f"{name}: action type must be one of {ACTION_TYPES}, got {action_type!r}"
            )
        if action_type == "py" and target != NO_FUNC and target not in BUILTIN_ACTIONS:
            raise UnknownBuiltin(
                f"{name}: unknown built-in action {target!r} "
                f"(known: {NO_FUNC}, {', '.join(sorted(BUILTIN_ACTIONS))})"
            )
        entries[name] = (action_type, target)
    return ActionMapping(entries)


def load_mapping(path: str | Path) -> ActionMapping:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MappingError(f"{path}: {exc}") from exc
    return parse_mapping(obj)


def save_mapping(mapping: ActionMapping, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(mapping.to_json_obj(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# ── Sinks ─────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class SinkRecord:
    action: str
    args: tuple
    ts_ms: int
    outcome: str


class ActionSink:
    """Interface between recognized gestures and their effects."""

    def move_cursor(self, x: int, y: int) -> str:
        raise NotImplementedError

    def click(self, button: str) -> str:
        raise NotImplementedError

    def double_click(self) -> str:
        raise NotImplementedError

    def scroll(self, amount: int) -> str:
        raise NotImplementedError

    def key_press(self, key: str) -> str:
        raise NotImplementedError

    def take_screenshot(self) -> str:
        raise NotImplementedError

    def run_shell(self, command: str) -> str:
        raise NotImplementedError


class ShellRunner:
    """Spawns shell commands off the dispatch path.

    Commands are queued to one worker thread; spawn cost and command
    runtime never touch the frame path. Each process gets a reaper
    thread enforcing the kill timeout. Spawn failures are logged and
    counted, never raised into the pipeline.
    """

    def __init__(self) -> None:
        self._queue: queue.Queue[str | None] = queue.Queue()
        self.spawned = 0
        self.failures = 0
        self._worker = threading.Thread(
            target=self._run, name="shell-runner", daemon=True
        )
        self._worker.start()

    def submit(self, command: str) -> None:
        self._queue.put(command)

    def _run(self) -> None:
        while True:
            command = self._queue.get()
            if command is None:
                return
            try:
                proc = subprocess.Popen(
                    command,
                    shell=True,
                    stdout=subprocess.DEVNULL,
                    stderr=subprocess.DEVNULL,
                    stdin=subprocess.DEVNULL,
                )
            except OSError as exc:
                self.failures += 1
                log.warning("shell spawn failure (non-fatal): %s: %s", command, exc)
                continue
            self.spawned += 1
            threading.Thread(target=self._reap, args=(proc, command),
                             name="shell-reaper", daemon=True).start()

    @staticmethod
    def _reap(proc: subprocess.Popen, command: str) -> None:
        try:
            code = proc.wait(timeout=SHELL_KILL_TIMEOUT_S)
            log.debug("shell action exited with %d: %s", code, command)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            log.warning("shell action killed after %.0fs: %s",
                        SHELL_KILL_TIMEOUT_S, command)

    def drain(self, timeout: float = 10.0) -> None:
        """Wait until every queued command has been spawned (tests)."""
        deadline = time.time() + timeout
        while not self._queue.empty() and time.time() < deadline:
            time.sleep(0.01)


class LoggingSink(ActionSink):
    """Default sink: records every action instead of touching the OS.

    Shell commands are still really spawned (asynchronously, detached,
    with a kill timeout); everything else becomes a SinkRecord only.
    """

    def __init__(self, spawn_shell: bool = True) -> None:
        self.records: list[SinkRecord] = []
        self._lock = threading.Lock()
        self._runner = ShellRunner() if spawn_shell else None

    def _record(self, action: str, args: tuple, outcome: str = "ok") -> str:
        rec = SinkRecord(action, args, int(time.time() * 1000), outcome)
        with self._lock:
            self.records.append(rec)
        return outcome

    def move_cursor(self, x: int, y: int) -> str:
        return self._record("move_cursor", (x, y))

    def click(self, button: str) -> str:
        return self._record("click", (button,))

    def double_click(self) -> str:
        return self._record("double_click", ())

    def scroll(self, amount: int) -> str:
        return self._record("scroll", (amount,))

    def key_press(self, key: str) -> str:
        return self._record("key_press", (key,))

    def take_screenshot(self) -> str:
        return self._record("take_screenshot", ())

    def run_shell(self, command: str) -> str:
        if self._runner is None:
            return self._record("run_shell", (command,), "skipped")
        self._runner.submit(command)
        return self._record("run_shell", (command,), "spawned")


# ── Executor ──────────────────────────────────────────────────────────


class Executor:
    """Dispatches events against the active mapping.

    The mapping is swapped atomically (reference assignment); a dispatch
    concurrent with a swap observes exactly the old or the new table.
    Dispatch is total: every event yields exactly one record.
    """

    def __init__(
        self,
        mapping: ActionMapping,
        sink: ActionSink,
        log_file: IO[str] | None = None,
    ) -> None:
        self._mapping = mapping
        self.sink = sink
        self._log_file = log_file
        self._log_lock = threading.Lock()
        self.dispatch_records: list[dict] = []

    @property
    def mapping(self) -> ActionMapping:
        return self._mapping

    def swap_mapping(self, new: ActionMapping) -> None:
        self._mapping = new  # atomic reference swap

    def execute(self, event: GestureEvent) -> dict:
        """Dispatch one event; returns (and logs) its dispatch record."""
        ts = event.timestamp_ms
        if isinstance(event.label, CursorMove):
            outcome = self.sink.move_cursor(event.label.x_px, event.label.y_px)
            return self._log(ts, "__cursor__", "py",
                             f"move_cursor({event.label.x_px},{event.label.y_px})",
                             outcome)
        gesture = event.label.name
        mapping = self._mapping  # snapshot: immune to concurrent swap
        entry = mapping.get(gesture)
        if entry is None:
            log.warning("no action mapped for gesture %r", gesture)
            return self._log(ts, gesture, "none", "", "unmapped")
        action_type, target = entry
        if action_type == "sh":
            try:
                outcome = self.sink.run_shell(target)
            except ShellSpawnFailure as exc:
                outcome = f"spawn_failure: {exc}"
            return self._log(ts, gesture, "sh", target, outcome)
        if target == NO_FUNC:
            return self._log(ts, gesture, "py", NO_FUNC, "noop")
        method, args = BUILTIN_ACTIONS[target]
        outcome = getattr(self.sink, method)(*args)
        return self._log(ts, gesture, "py", target, outcome)

    def _log(self, ts: int, gesture: str, action_type: str, target: str,
             outcome: str) -> dict:
        record = {
            "ts": ts,
            "gesture": gesture,
            "action_type": action_type,
            "target": target,
            "outcome": outcome,
        }
        self.dispatch_records.append(record)
        if self._log_file is not None:
            with self._log_lock:
                self._log_file.write(json.dumps(record) + "\n")
        return record
