"""Streaming recognition state machine.

Per frame, in order:
1. Cursor tracking: project the index fingertip onto the screen and
   smooth it with an EMA; always emits one CursorMove event.
2. If the signal flag is off, the static path runs: the frame's pose is
   classified with the calibrated softmax and a non-"none" label whose
   consecutive-frame streak reaches exactly S emits one event (the
   streak must break before the same label can fire again).
3. Signal edges delimit dynamic segments: a rising edge starts
   buffering raw frames, a falling edge closes the buffer and, if the
   segment is long enough, classifies it in one shot. The static path
   is suppressed while the signal is on.

Deterministic: the same frame sequence against the same models and
config always yields the identical event list.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CursorMove,
    GestureEvent,
    GestureKind,
    GestureLabel,
    INDEX_TIP,
    KeypointFrame,
    NONE_LABEL,
)
from .features import dynamic_features, static_feature
from .nn import CalibrationConfig, DynamicNet, StaticNet, calibrated_softmax, softmax

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecognizerConfig:
    stability_frames: int = 5       # consecutive frames before a static event
    min_segment_frames: int = 10    # shorter signal runs are discarded
    ema_alpha: float = 0.5          # cursor smoothing factor, (0, 1]
    screen_width: int = 1920
    screen_height: int = 1080

    def __post_init__(self) -> None:
        if self.stability_frames < 1:
            raise ValueError("stability_frames must be >= 1")
        if self.min_segment_frames < 1:
            raise ValueError("min_segment_frames must be >= 1")
        if not 0.0 < self.ema_alpha <= 1.0:
            raise ValueError("ema_alpha must be in (0, 1]")


@dataclass
class RecognizerState:
    dynamic_buffer: list[KeypointFrame] = field(default_factory=list)
    streak_label: str | None = None
    streak_count: int = 0
    cursor: tuple[float, float] | None = None
    discarded_segments: int = 0


class Recognizer:
    """Owns one stream's state; single-consumer, not thread-safe."""

    def __init__(
        self,
        static_model: StaticNet,
        dynamic_model: DynamicNet | None,
        config: RecognizerConfig | None = None,
        calibration: CalibrationConfig | None = None,
    ) -> None:
        self.static_model = static_model
        self.dynamic_model = dynamic_model
        self.config = config or RecognizerConfig()
        self.calibration = calibration
        self.state = RecognizerState()

    def process_frame(self, frame: KeypointFrame) -> list[GestureEvent]:
        """All events triggered by one frame, cursor event first."""
        events = [self.mouse_track(frame)]
        if frame.signal:
            if not self.state.dynamic_buffer:
                # rising edge: open a segment, break the static streak
                self.state.streak_label = None
                self.state.streak_count = 0
            self.state.dynamic_buffer.append(frame)
            return events
        if self.state.dynamic_buffer:
            event = self._close_segment(frame.timestamp_ms)
            if event is not None:
                events.append(event)
        static_event = self._static_step(frame)
        if static_event is not None:
            events.append(static_event)
        return events

    # ── static path ───────────────────────────────────────────────

    def _static_step(self, frame: KeypointFrame) -> GestureEvent | None:
        probs, idx = calibrated_softmax(
            self.static_model.forward(static_feature(frame)), self.calibration
        )
        name = self.static_model.labels[idx]
        if name == NONE_LABEL:
            self.state.streak_label = None
            self.state.streak_count = 0
            return None
        if name == self.state.streak_label:
            self.state.streak_count += 1
        else:
            self.state.streak_label = name
            self.state.streak_count = 1
        if self.state.streak_count != self.config.stability_frames:
            return None  # fires exactly once, when the streak reaches S
        return GestureEvent(
            label=GestureLabel(name, GestureKind.STATIC),
            confidence=float(probs[idx]),
            timestamp_ms=frame.timestamp_ms,
            source_frame_count=1,
        )

    # ── dynamic segmentation ──────────────────────────────────────

    def _close_segment(self, timestamp_ms: int) -> GestureEvent | None:
        segment = self.state.dynamic_buffer
        self.state.dynamic_buffer = []
        if len(segment) < self.config.min_segment_frames:
            self.state.discarded_segments += 1
            log.info(
                "discarding %d-frame segment (< %d)",
                len(segment), self.config.min_segment_frames,
            )
            return None
        if self.dynamic_model is None:
            log.warning("signal segment seen but no dynamic model loaded")
            return None
        logits = self.dynamic_model.forward(dynamic_features(segment))
        probs = softmax(logits)
        idx = int(np.argmax(probs))
        return GestureEvent(
            label=GestureLabel(self.dynamic_model.labels[idx], GestureKind.DYNAMIC),
            confidence=float(probs[idx]),
            timestamp_ms=timestamp_ms,
            source_frame_count=len(segment),
        )

    # ── cursor tracking ───────────────────────────────────────────

    def mouse_track(self, frame: KeypointFrame) -> GestureEvent:
        """EMA-smoothed screen projection of the index fingertip."""
        cfg = self.config
        x, y, _ = frame.landmarks[INDEX_TIP]
        target = (
            min(max(x, 0.0), 1.0) * cfg.screen_width,
            min(max(y, 0.0), 1.0) * cfg.screen_height,
        )
        prev = self.state.cursor
        if prev is None:
            smoothed = target
        else:
            a = cfg.ema_alpha
            smoothed = (
                a * target[0] + (1.0 - a) * prev[0],
                a * target[1] + (1.0 - a) * prev[1],
            )
        self.state.cursor = smoothed
        return GestureEvent(
            label=CursorMove(round(smoothed[0]), round(smoothed[1])),
            confidence=1.0,
            timestamp_ms=frame.timestamp_ms,
            source_frame_count=1,
        )

    def flush(self, timestamp_ms: int) -> list[GestureEvent]:
        """Close any open segment (stream end counts as a falling edge)."""
        if not self.state.dynamic_buffer:
            return []
        event = self._close_segment(timestamp_ms)
        return [event] if event is not None else []
