"""Shared domain vocabulary: keypoint frames, gesture labels, events.

Coordinate conventions:
- Landmarks are normalized camera coordinates: x, y nominally in [0..1]
  (larger y is further down the image), z is relative depth, unbounded.
- Landmark indices: 0=wrist, 1-4=thumb, 5-8=index, 9-12=middle,
  13-16=ring, 17-20=pinky (base to tip along each finger chain).

All types here are immutable values: safe to copy between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

NUM_LANDMARKS = 21

# Index-fingertip landmark, used for cursor tracking.
INDEX_TIP = 8
WRIST = 0

# Bone edges of the hand skeleton (start, end), base to tip per finger.
HAND_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 4),        # thumb
    (0, 5), (5, 6), (6, 7), (7, 8),        # index
    (0, 9), (9, 10), (10, 11), (11, 12),   # middle
    (0, 13), (13, 14), (14, 15), (15, 16),  # ring
    (0, 17), (17, 18), (18, 19), (19, 20),  # pinky
)

# Reserved static label for "no relevant gesture".
NONE_LABEL = "none"


class FrameError(ValueError):
    """Base class for frame validation failures."""


class WrongLandmarkCount(FrameError):
    pass


class NonFiniteCoordinate(FrameError):
    pass


class NegativeTimestamp(FrameError):
    pass


class Handedness(Enum):
    LEFT = "L"
    RIGHT = "R"

    @property
    def feature_value(self) -> float:
        """Encoding appended to static features: Left=0.0, Right=1.0."""
        return 0.0 if self is Handedness.LEFT else 1.0


class GestureKind(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class KeypointFrame:
    """One timestamped hand observation.

    ``signal`` is the segmentation marker (the producer's held key) that
    delimits dynamic-gesture segments; it travels inside the frame so
    replay files are self-contained.
    """

    landmarks: tuple[tuple[float, float, float], ...]
    handedness: Handedness
    timestamp_ms: int
    signal: bool = False

    def translated(self, dx: float, dy: float, dz: float = 0.0) -> "KeypointFrame":
        """Copy with every landmark shifted by (dx, dy, dz)."""
        moved = tuple((x + dx, y + dy, z + dz) for x, y, z in self.landmarks)
        return KeypointFrame(moved, self.handedness, self.timestamp_ms, self.signal)


@dataclass(frozen=True)
class GestureLabel:
    name: str
    kind: GestureKind


@dataclass(frozen=True)
class CursorMove:
    x_px: int
    y_px: int


@dataclass(frozen=True)
class GestureEvent:
    """A recognized gesture (or cursor move) with confidence and provenance.

    ``source_frame_count`` is 1 for static/cursor events and the segment
    length for dynamic events.
    """

    label: GestureLabel | CursorMove
    confidence: float
    timestamp_ms: int
    source_frame_count: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")
        if self.source_frame_count < 1:
            raise ValueError("source_frame_count must be positive")

    @property
    def is_cursor(self) -> bool:
        return isinstance(self.label, CursorMove)


def validate_frame(
    landmarks: Sequence[Sequence[float]],
    handedness: Handedness | str,
    timestamp_ms: int,
    signal: bool = False,
    warn: bool = True,
) -> KeypointFrame:
    """Validate a candidate frame; never silently repairs data.

    x or y outside [0,1] is accepted (hand partially out of frame) — only
    non-finite coordinates, wrong landmark counts and negative timestamps
    are rejected.
    """
    if len(landmarks) != NUM_LANDMARKS:
        raise WrongLandmarkCount(
            f"expected {NUM_LANDMARKS} landmarks, got {len(landmarks)}"
        )
    pts = []
    out_of_range = False
    for i, p in enumerate(landmarks):
        if len(p) != 3:
            raise WrongLandmarkCount(f"landmark {i} has {len(p)} components, want 3")
        x, y, z = float(p[0]), float(p[1]), float(p[2])
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise NonFiniteCoordinate(f"landmark {i} has non-finite component")
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            out_of_range = True
        pts.append((x, y, z))
    if timestamp_ms < 0:
        raise NegativeTimestamp(f"timestamp_ms={timestamp_ms}")
    if isinstance(handedness, str):
        handedness = Handedness(handedness)
    if out_of_range and warn:
        _warn_out_of_range()
    return KeypointFrame(tuple(pts), handedness, int(timestamp_ms), bool(signal))


def _warn_out_of_range() -> None:
    import logging

    logging.getLogger(__name__).debug("landmark x/y outside [0,1]; accepted")
