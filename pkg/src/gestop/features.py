"""Feature transforms from keypoint frames to network inputs.

Layout is frozen (see docs/feature-layout.md); saved models embed
FEATURE_LAYOUT_VERSION and refuse to load against a different layout.

Static feature (49):
    48 relative-bone components + 1 handedness flag (Left=0.0, Right=1.0).

Dynamic feature row (52 per frame):
    [0:2)  absolute wrist position (x, y)
    [2:4)  wrist timediff vs previous frame (x, y); exactly (0, 0) on row 0
    [4:52) the 48 relative-bone components

The 16 relative bones, in order, are the intra-chain differences
(end - start) componentwise:
    thumb  0->1, 1->2, 2->3, 3->4
    index  5->6, 6->7, 7->8
    middle 9->10, 10->11, 11->12
    ring   13->14, 14->15, 15->16
    pinky  17->18, 18->19, 19->20
Wrist->finger-base vectors are not included for the four fingers.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import KeypointFrame, WRIST

FEATURE_LAYOUT_VERSION = 1

STATIC_FEATURE_DIM = 49
DYNAMIC_FEATURE_DIM = 52

# (start, end) landmark index pairs; 4 thumb bones, 3 per other finger.
BONES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 4),
    (5, 6), (6, 7), (7, 8),
    (9, 10), (10, 11), (11, 12),
    (13, 14), (14, 15), (15, 16),
    (17, 18), (18, 19), (19, 20),
)

_STARTS = np.array([b[0] for b in BONES])
_ENDS = np.array([b[1] for b in BONES])


class EmptySequence(ValueError):
    pass


def relative_vectors(frame: KeypointFrame) -> np.ndarray:
    """48 reals: the 16 per-bone (end - start) differences, flattened.

    Translation cancels exactly: applying one offset to every landmark
    leaves the result bit-identical whenever the translated coordinates
    are themselves exact (differences of exact sums round identically).
    """
    pts = np.asarray(frame.landmarks, dtype=np.float64)
    return (pts[_ENDS] - pts[_STARTS]).reshape(-1)


def static_feature(frame: KeypointFrame) -> np.ndarray:
    """49-dim network input: relative vectors plus handedness flag."""
    out = np.empty(STATIC_FEATURE_DIM, dtype=np.float64)
    out[:48] = relative_vectors(frame)
    out[48] = frame.handedness.feature_value
    return out


def static_features_from_coords(
    coords: np.ndarray, handedness_values: np.ndarray
) -> np.ndarray:
    """Vectorized static features for N samples of 63 raw coordinates."""
    pts = np.asarray(coords, dtype=np.float64).reshape(-1, 21, 3)
    out = np.empty((pts.shape[0], STATIC_FEATURE_DIM), dtype=np.float64)
    out[:, :48] = (pts[:, _ENDS] - pts[:, _STARTS]).reshape(pts.shape[0], 48)
    out[:, 48] = handedness_values
    return out


def dynamic_features(frames: Sequence[KeypointFrame]) -> np.ndarray:
    """T x 52 sequence input; see module docstring for the row layout."""
    if len(frames) == 0:
        raise EmptySequence("dynamic_features needs at least one frame")
    rows = np.empty((len(frames), DYNAMIC_FEATURE_DIM), dtype=np.float64)
    prev_xy: tuple[float, float] | None = None
    for i, frame in enumerate(frames):
        wx, wy, _ = frame.landmarks[WRIST]
        rows[i, 0] = wx
        rows[i, 1] = wy
        if prev_xy is None:
            rows[i, 2] = 0.0
            rows[i, 3] = 0.0
        else:
            rows[i, 2] = wx - prev_xy[0]
            rows[i, 3] = wy - prev_xy[1]
        rows[i, 4:] = relative_vectors(frame)
        prev_xy = (wx, wy)
    return rows
