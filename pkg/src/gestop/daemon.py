"""Long-running daemon: ingress -> recognizer -> executor, with the
control/monitoring plane and recording/retraining wired in.

Thread layout:
    ingress accept/read threads  (wire.IngressListener)
    one consumer thread          (owns the Recognizer state)
    control-plane HTTP threads   (one per request; WS streams long-lived)
    shell reaper threads         (executor, fire-and-forget)

Frames flow through one bounded queue (capacity 256, blocking put =
backpressure on the producer socket). Events fan out to the executor
inline and to WS subscribers through drop-oldest queues, so a stalled
dashboard never slows the frame path.
"""

from __future__ import annotations

import logging
import os
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import Broadcast, ControlServer, DEFAULT_CONTROL_PORT
from .core import CursorMove, GestureEvent, KeypointFrame, NONE_LABEL
from .datasets import (
    DynamicDataset,
    StaticDataset,
    append_static_csv,
    load_dynamic_dir,
    load_static_csv,
    split_indices,
    write_replay,
)
from .executor import ActionSink, Executor, LoggingSink, load_mapping, parse_mapping, save_mapping
from .features import dynamic_features, static_features_from_coords
from .modelio import load_model, save_model
from .nn import CalibrationConfig, DynamicNet, StaticNet
from .recognizer import Recognizer, RecognizerConfig
from .training import TrainConfig, train
from .wire import DEFAULT_INGRESS_PORT, INGRESS_QUEUE_CAPACITY, IngressListener

log = logging.getLogger(__name__)


def gestop_home() -> Path:
    return Path(os.environ.get("GESTOP_HOME", Path.home() / ".gestop"))


@dataclass
class DaemonConfig:
    ingress_port: int = DEFAULT_INGRESS_PORT
    control_port: int = DEFAULT_CONTROL_PORT
    static_model_path: Path | str = ""
    dynamic_model_path: Path | str | None = None
    mapping_path: Path | str = ""
    data_dir: Path | str | None = None
    recognizer: RecognizerConfig = field(default_factory=RecognizerConfig)
    calibration_k: float = 2.0
    host: str = "127.0.0.1"

    def __post_init__(self) -> None:
        if self.ingress_port == self.control_port and self.ingress_port != 0:
            raise ValueError("ingress and control ports must be distinct")


def make_calibration(model: StaticNet, k: float) -> CalibrationConfig | None:
    """Boost the reserved none class if the model has one."""
    if NONE_LABEL in model.labels and k > 1.0:
        return CalibrationConfig(model.labels.index(NONE_LABEL), k)
    return None


class _RecordingState:
    def __init__(self, kind: str, label: str) -> None:
        self.kind = kind
        self.label = label
        self.count = 0
        self.run: list[KeypointFrame] = []


class Daemon:
    """Owns the full pipeline; start() returns once all planes are up."""

    def __init__(self, cfg: DaemonConfig, sink: ActionSink | None = None,
                 dispatch_log_path: Path | str | None = None,
                 static_dir: Path | str | None = None) -> None:
        self.cfg = cfg
        static_model = load_model(cfg.static_model_path)
        if not isinstance(static_model, StaticNet):
            raise ValueError(f"{cfg.static_model_path} is not a static model")
        dynamic_model = None
        if cfg.dynamic_model_path:
            dynamic_model = load_model(cfg.dynamic_model_path)
            if not isinstance(dynamic_model, DynamicNet):
                raise ValueError(f"{cfg.dynamic_model_path} is not a dynamic model")
        self.recognizer = Recognizer(
            static_model, dynamic_model, cfg.recognizer,
            make_calibration(static_model, cfg.calibration_k),
        )
        mapping = load_mapping(cfg.mapping_path)
        self._dispatch_log_file = None
        if dispatch_log_path is not None:
            Path(dispatch_log_path).parent.mkdir(parents=True, exist_ok=True)
            # line-buffered so tail -f and abrupt exits see every record
            self._dispatch_log_file = open(dispatch_log_path, "a",
                                           buffering=1, encoding="utf-8")
        self.executor = Executor(mapping, sink or LoggingSink(),
                                 log_file=self._dispatch_log_file)
        self.events = Broadcast()
        self._frames: queue.Queue = queue.Queue(maxsize=INGRESS_QUEUE_CAPACITY)
        self._signal_override = False
        self._recording: _RecordingState | None = None
        self._recording_lock = threading.Lock()
        self._ws_clients = 0
        self._event_count = 0
        self._stop = threading.Event()

        self._listener = IngressListener(cfg.ingress_port, self._frames.put,
                                         host=cfg.host)
        self._control = ControlServer(self.control_api(), self.events,
                                      port=cfg.control_port, host=cfg.host,
                                      static_dir=static_dir)
        self._consumer = threading.Thread(
            target=self._consume_loop, name="frame-consumer", daemon=True
        )

    # ── lifecycle ─────────────────────────────────────────────────

    @property
    def ingress_port(self) -> int:
        return self._listener.port

    @property
    def control_port(self) -> int:
        return self._control.port

    def start(self) -> "Daemon":
        self._listener.start()
        self._control.start()
        self._consumer.start()
        log.info("daemon up: ingress :%d, control :%d",
                 self.ingress_port, self.control_port)
        return self

    def stop(self) -> None:
        """Cooperative shutdown: drain the frame queue, flush logs."""
        self._stop.set()
        self._listener.stop()
        self._frames.put(None)  # sentinel; consumer drains queued frames first
        self._consumer.join(timeout=10)
        self._control.stop()
        with self._recording_lock:
            if self._recording is not None:
                self._finish_recording()
        if self._dispatch_log_file is not None:
            self._dispatch_log_file.flush()
            self._dispatch_log_file.close()
        log.info("daemon stopped; %d events dispatched", self._event_count)

    # ── frame path ────────────────────────────────────────────────

    def _consume_loop(self) -> None:
        while True:
            frame = self._frames.get()
            if frame is None:
                break
            try:
                self._handle_frame(frame)
            except Exception:
                log.exception("frame processing error (non-fatal)")

    def _handle_frame(self, frame: KeypointFrame) -> None:
        if self._signal_override and not frame.signal:
            frame = KeypointFrame(frame.landmarks, frame.handedness,
                                  frame.timestamp_ms, signal=True)
        self._record_frame(frame)
        events = self.recognizer.process_frame(frame)
        for event in events:
            self.executor.execute(event)
            self._event_count += 1
            self.events.publish(_event_message(event))
        self.events.publish({
            "type": "frame",
            "landmarks": [list(p) for p in frame.landmarks],
            "handedness": frame.handedness.value,
            "signal": frame.signal,
            "ts": frame.timestamp_ms,
        })

    # ── recording ─────────────────────────────────────────────────

    def _data_dir(self) -> Path:
        return Path(self.cfg.data_dir) if self.cfg.data_dir else gestop_home() / "data"

    def static_dataset_path(self) -> Path:
        return self._data_dir() / "static.csv"

    def dynamic_dataset_dir(self) -> Path:
        return self._data_dir() / "dynamic"

    def _record_frame(self, frame: KeypointFrame) -> None:
        with self._recording_lock:
            rec = self._recording
            if rec is None:
                return
            if rec.kind == "static":
                append_static_csv(self.static_dataset_path(), [(frame, rec.label)])
                rec.count += 1
                if rec.count % 25 == 0:
                    self._publish_recording_status(rec)
            else:
                if frame.signal:
                    rec.run.append(frame)
                elif rec.run:
                    self._close_recording_run(rec)

    def _close_recording_run(self, rec: _RecordingState) -> None:
        run, rec.run = rec.run, []
        if len(run) < self.cfg.recognizer.min_segment_frames:
            log.warning("recording: dropping %d-frame run", len(run))
            return
        out_dir = self.dynamic_dataset_dir() / rec.label
        out_dir.mkdir(parents=True, exist_ok=True)
        n = len(list(out_dir.glob("seq_*.gr")))
        write_replay(out_dir / f"seq_{n:05d}.gr", run, label=rec.label)
        rec.count += 1
        self._publish_recording_status(rec)

    def _publish_recording_status(self, rec: _RecordingState) -> None:
        self.events.publish({
            "type": "status", "recording":
            {"kind": rec.kind, "label": rec.label, "count": rec.count},
        })

    def _finish_recording(self) -> dict:
        rec = self._recording
        assert rec is not None
        if rec.kind == "dynamic" and rec.run:
            self._close_recording_run(rec)
        self._recording = None
        result = {"kind": rec.kind, "label": rec.label, "count": rec.count}
        self.events.publish({"type": "status", "recording": None,
                             "recorded": result})
        return result

    # ── retraining ────────────────────────────────────────────────

    def _retrain(self, kind: str) -> dict:
        if kind == "static":
            dataset = load_static_csv(self.static_dataset_path())
            model, val_acc = retrain_static(
                dataset, seed=42, on_epoch=self._publish_epoch
            )
            save_model(model, self.cfg.static_model_path)
            self.recognizer.static_model = model
            self.recognizer.calibration = make_calibration(
                model, self.cfg.calibration_k
            )
        elif kind == "dynamic":
            dataset = load_dynamic_dir(self.dynamic_dataset_dir())
            model, val_acc = retrain_dynamic(
                dataset, seed=42, on_epoch=self._publish_epoch
            )
            if self.cfg.dynamic_model_path:
                save_model(model, self.cfg.dynamic_model_path)
            self.recognizer.dynamic_model = model
        else:
            raise ValueError(f"unknown retrain kind {kind!r}")
        labels = list(model.labels)
        self.events.publish({"type": "status", "retrained": kind,
                             "labels": labels, "val_accuracy": val_acc})
        return {"kind": kind, "labels": labels, "val_accuracy": val_acc}

    def _publish_epoch(self, stats) -> None:
        self.events.publish({
            "type": "training", "epoch": stats.epoch,
            "loss": stats.loss, "val_acc": stats.val_accuracy,
        })

    # ── control-plane surface ─────────────────────────────────────

    def control_api(self) -> dict:
        return {
            "get_mapping": lambda: self.executor.mapping.to_json_obj(),
            "put_mapping": self._put_mapping,
            "get_labels": self._get_labels,
            "get_status": self._get_status,
            "record_start": self._record_start,
            "record_stop": self._record_stop,
            "retrain": self._retrain,
            "set_signal": self._set_signal,
            "on_ws_connect": lambda: self._ws_delta(1),
            "on_ws_disconnect": lambda: self._ws_delta(-1),
        }

    def _put_mapping(self, body) -> dict:
        mapping = parse_mapping(body)  # raises on invalid input
        self.executor.swap_mapping(mapping)
        if self.cfg.mapping_path:
            save_mapping(mapping, self.cfg.mapping_path)
        return mapping.to_json_obj()

    def _get_labels(self) -> dict:
        dyn = self.recognizer.dynamic_model
        return {
            "static": list(self.recognizer.static_model.labels),
            "dynamic": list(dyn.labels) if dyn is not None else [],
        }

    def _get_status(self) -> dict:
        with self._recording_lock:
            rec = self._recording
            recording = (
                {"kind": rec.kind, "label": rec.label, "count": rec.count}
                if rec else None
            )
        return {
            "frames": self._listener.stats.frames,
            "malformed": self._listener.stats.malformed,
            "events": self._event_count,
            "queue_depth": self._frames.qsize(),
            "dropped_broadcasts": self.events.dropped,
            "ws_clients": self._ws_clients,
            "signal_override": self._signal_override,
            "recording": recording,
        }

    def _record_start(self, kind: str, label: str) -> dict:
        if kind not in ("static", "dynamic"):
            raise ValueError(f"kind must be static or dynamic, got {kind!r}")
        if not label:
            raise ValueError("label must be non-empty")
        with self._recording_lock:
            if self._recording is not None:
                raise ValueError("already recording")
            self._recording = _RecordingState(kind, label)
            self._publish_recording_status(self._recording)
        return {"kind": kind, "label": label}

    def _record_stop(self) -> dict:
        with self._recording_lock:
            if self._recording is None:
                raise ValueError("not recording")
            return self._finish_recording()

    def _set_signal(self, on: bool) -> dict:
        self._signal_override = on
        self.events.publish({"type": "status", "signal_override": on})
        return {"on": on}

    def _ws_delta(self, d: int) -> None:
        self._ws_clients += d


def _event_message(event: GestureEvent) -> dict:
    if isinstance(event.label, CursorMove):
        return {"type": "cursor", "x": event.label.x_px, "y": event.label.y_px,
                "ts": event.timestamp_ms}
    return {
        "type": "gesture",
        "name": event.label.name,
        "kind": event.label.kind.value,
        "confidence": event.confidence,
        "ts": event.timestamp_ms,
        "frames": event.source_frame_count,
    }


# ── retraining helpers (shared with the CLI) ──────────────────────────


def featurize_static(dataset: StaticDataset, labels: tuple[str, ...]):
    index = {name: i for i, name in enumerate(labels)}
    hands = np.array([h.feature_value for h in dataset.handedness])
    x = static_features_from_coords(dataset.coords, hands)
    y = np.array([index[l] for l in dataset.labels], dtype=np.int64)
    return x, y


def featurize_dynamic(dataset: DynamicDataset, labels: tuple[str, ...]):
    index = {name: i for i, name in enumerate(labels)}
    xs = [dynamic_features(s) for s in dataset.sequences]
    y = np.array([index[l] for l in dataset.labels], dtype=np.int64)
    return xs, y


def retrain_static(dataset: StaticDataset, seed: int = 42,
                   cfg: TrainConfig | None = None, val_fraction: float = 0.2,
                   hidden: int = 64, on_epoch=None) -> tuple[StaticNet, float]:
    labels = tuple(dataset.label_set())
    train_idx, val_idx = split_indices(dataset.labels, val_fraction, seed)
    x, y = featurize_static(dataset, labels)
    model = StaticNet(labels, hidden=hidden, seed=seed)
    history = train(
        model, x[train_idx], y[train_idx],
        cfg or TrainConfig(seed=seed),
        val=(x[val_idx], y[val_idx]), on_epoch=on_epoch,
    )
    return model, history.final_val_accuracy or 0.0


def retrain_dynamic(dataset: DynamicDataset, seed: int = 42,
                    cfg: TrainConfig | None = None, val_fraction: float = 0.2,
                    encoder: int = 32, hidden: int = 64,
                    on_epoch=None) -> tuple[DynamicNet, float]:
    labels = tuple(dataset.label_set())
    train_idx, val_idx = split_indices(dataset.labels, val_fraction, seed)
    xs, y = featurize_dynamic(dataset, labels)
    model = DynamicNet(labels, encoder=encoder, hidden=hidden, seed=seed)
    history = train(
        model, [xs[i] for i in train_idx], y[train_idx],
        cfg or TrainConfig(epochs=15, batch_size=16, seed=seed),
        val=([xs[i] for i in val_idx], y[val_idx]), on_epoch=on_epoch,
    )
    return model, history.final_val_accuracy or 0.0
