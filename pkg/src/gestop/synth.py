"""Synthetic keypoint data: canonical static poses and dynamic trajectories.

Stands in for a camera + keypoint detector at desk scale. Every generator
is a pure function of (spec, n, noise_sigma, seed): same arguments, same
frames, bit for bit.

The pose tables below are frozen; trained models depend on them only
through the feature layout, but tests freeze expected values against
them. Coordinates are normalized image coordinates (x right, y down),
hand roughly centered, fingers pointing up. See docs/poses.md.
"""

from __future__ import annotations

import numpy as np

from .core import Handedness, KeypointFrame, NUM_LANDMARKS
from .wire import ReplayFile, ReplayHeader

FRAME_INTERVAL_MS = 33  # ~30 fps
SYNTH_FPS = 30

# Reserved pose name: per-frame random clutter for the "none" class.
CLUTTER_POSE = "none"


class UnknownPose(KeyError):
    pass


class UnknownTemplate(KeyError):
    pass


# ── Canonical static poses (21 x (x, y, z)) ──────────────────────────

_OPEN_PALM = (
    (0.50, 0.80, 0.000),
    # thumb
    (0.42, 0.74, -0.010), (0.36, 0.68, -0.020), (0.32, 0.62, -0.030), (0.29, 0.56, -0.040),
    # index
    (0.44, 0.58, -0.010), (0.42, 0.48, -0.020), (0.41, 0.41, -0.025), (0.40, 0.34, -0.030),
    # middle
    (0.50, 0.56, -0.010), (0.50, 0.45, -0.020), (0.50, 0.37, -0.025), (0.50, 0.30, -0.030),
    # ring
    (0.56, 0.58, -0.010), (0.58, 0.48, -0.020), (0.59, 0.40, -0.025), (0.60, 0.34, -0.030),
    # pinky
    (0.62, 0.62, -0.005), (0.65, 0.54, -0.010), (0.67, 0.48, -0.015), (0.69, 0.43, -0.020),
)

_FIST = (
    (0.50, 0.80, 0.000),
    (0.43, 0.75, -0.010), (0.39, 0.70, -0.020), (0.41, 0.65, -0.030), (0.45, 0.63, -0.040),
    (0.44, 0.60, -0.010), (0.44, 0.53, -0.030), (0.45, 0.58, -0.050), (0.46, 0.64, -0.050),
    (0.50, 0.59, -0.010), (0.50, 0.51, -0.030), (0.50, 0.57, -0.050), (0.50, 0.64, -0.050),
    (0.56, 0.60, -0.010), (0.56, 0.53, -0.030), (0.55, 0.58, -0.050), (0.55, 0.64, -0.050),
    (0.61, 0.62, -0.005), (0.62, 0.56, -0.020), (0.61, 0.61, -0.040), (0.60, 0.66, -0.040),
)

# Index extended, everything else curled.
_POINT = (
    (0.50, 0.80, 0.000),
    (0.43, 0.75, -0.010), (0.39, 0.70, -0.020), (0.41, 0.65, -0.030), (0.45, 0.63, -0.040),
    (0.44, 0.58, -0.010), (0.42, 0.48, -0.020), (0.41, 0.41, -0.025), (0.40, 0.34, -0.030),
    (0.50, 0.59, -0.010), (0.50, 0.51, -0.030), (0.50, 0.57, -0.050), (0.50, 0.64, -0.050),
    (0.56, 0.60, -0.010), (0.56, 0.53, -0.030), (0.55, 0.58, -0.050), (0.55, 0.64, -0.050),
    (0.61, 0.62, -0.005), (0.62, 0.56, -0.020), (0.61, 0.61, -0.040), (0.60, 0.66, -0.040),
)

# Index and middle extended and spread, rest curled.
_PEACE = (
    (0.50, 0.80, 0.000),
    (0.43, 0.75, -0.010), (0.39, 0.70, -0.020), (0.41, 0.65, -0.030), (0.45, 0.63, -0.040),
    (0.44, 0.58, -0.010), (0.40, 0.48, -0.020), (0.38, 0.41, -0.025), (0.36, 0.34, -0.030),
    (0.50, 0.56, -0.010), (0.53, 0.45, -0.020), (0.55, 0.37, -0.025), (0.57, 0.30, -0.030),
    (0.56, 0.60, -0.010), (0.56, 0.53, -0.030), (0.55, 0.58, -0.050), (0.55, 0.64, -0.050),
    (0.61, 0.62, -0.005), (0.62, 0.56, -0.020), (0.61, 0.61, -0.040), (0.60, 0.66, -0.040),
)

# Thumb extended upward, fingers curled sideways (hand rotated 90°).
_THUMBS_UP = (
    (0.50, 0.70, 0.000),
    (0.47, 0.62, -0.010), (0.45, 0.55, -0.020), (0.44, 0.49, -0.030), (0.43, 0.43, -0.040),
    (0.55, 0.64, -0.010), (0.62, 0.63, -0.030), (0.58, 0.66, -0.050), (0.53, 0.67, -0.050),
    (0.56, 0.69, -0.010), (0.63, 0.69, -0.030), (0.58, 0.71, -0.050), (0.53, 0.72, -0.050),
    (0.56, 0.74, -0.010), (0.62, 0.74, -0.030), (0.57, 0.76, -0.050), (0.53, 0.77, -0.050),
    (0.55, 0.79, -0.005), (0.60, 0.79, -0.020), (0.56, 0.81, -0.040), (0.52, 0.82, -0.040),
)

POSES: dict[str, tuple[tuple[float, float, float], ...]] = {
    "open_palm": _OPEN_PALM,
    "fist": _FIST,
    "point": _POINT,
    "peace": _PEACE,
    "thumbs_up": _THUMBS_UP,
}

STATIC_POSE_NAMES = tuple(POSES)


def _clutter_landmarks(rng: np.random.Generator) -> np.ndarray:
    """One random hand-shaped point cloud for the none class.

    Wrist placed anywhere in frame, finger joints scattered around it.
    Unlike the canonical poses, every frame is a fresh random pose.
    """
    wrist = rng.uniform([0.2, 0.2, -0.02], [0.8, 0.8, 0.02])
    joints = wrist + rng.uniform(-0.25, 0.25, size=(NUM_LANDMARKS - 1, 3))
    joints[:, 2] = rng.uniform(-0.08, 0.02, size=NUM_LANDMARKS - 1)
    return np.vstack([wrist, joints])


def _frames_from_array(
    coords: np.ndarray,
    handedness: Handedness,
    signal: bool,
    t0_ms: int = 0,
) -> list[KeypointFrame]:
    frames = []
    for i, lm in enumerate(coords):
        pts = tuple((float(x), float(y), float(z)) for x, y, z in lm)
        frames.append(
            KeypointFrame(pts, handedness, t0_ms + i * FRAME_INTERVAL_MS, signal)
        )
    return frames


def synth_static(
    pose_spec: str,
    n: int,
    noise_sigma: float,
    seed: int,
    handedness: Handedness = Handedness.RIGHT,
) -> ReplayFile:
    """n frames of a canonical pose with per-coordinate Gaussian noise.

    ``pose_spec`` "none" draws a fresh random clutter pose per frame
    instead of repeating a canonical table.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    if pose_spec == CLUTTER_POSE:
        coords = np.stack([_clutter_landmarks(rng) for _ in range(n)])
    elif pose_spec in POSES:
        base = np.asarray(POSES[pose_spec], dtype=np.float64)
        coords = np.broadcast_to(base, (n, NUM_LANDMARKS, 3)).copy()
    else:
        raise UnknownPose(pose_spec)
    if noise_sigma > 0:
        coords = coords + rng.normal(0.0, noise_sigma, size=coords.shape)
    frames = _frames_from_array(coords, handedness, signal=False)
    header = ReplayHeader(label=pose_spec, fps=SYNTH_FPS)
    return ReplayFile(header, tuple(frames))


# ── Dynamic trajectory templates ──────────────────────────────────────
#
# Each template is a palm-offset path p(u), u in [0,1], added to every
# landmark of the open-palm base pose. Swipes translate linearly with a
# span of ~0.35 of the frame; circle traces a closed loop of radius 0.12.

_SWIPE_SPAN = 0.35
_CIRCLE_RADIUS = 0.12


def _template_offset(template: str, u: np.ndarray, amp: float) -> np.ndarray:
    zeros = np.zeros_like(u)
    if template == "swipe_right":
        return np.stack([amp * (u - 0.5), zeros], axis=1)
    if template == "swipe_left":
        return np.stack([-amp * (u - 0.5), zeros], axis=1)
    if template == "swipe_up":
        # y decreases upward in image coordinates
        return np.stack([zeros, -amp * (u - 0.5)], axis=1)
    if template == "swipe_down":
        return np.stack([zeros, amp * (u - 0.5)], axis=1)
    if template == "circle":
        r = amp * (_CIRCLE_RADIUS / _SWIPE_SPAN)
        ang = 2.0 * np.pi * u
        return np.stack([r * (np.cos(ang) - 1.0), r * np.sin(ang)], axis=1)
    raise UnknownTemplate(template)


TRAJECTORY_TEMPLATES = ("swipe_up", "swipe_down", "swipe_left", "swipe_right", "circle")


def synth_dynamic(
    template: str,
    frames: int,
    noise_sigma: float,
    seed: int,
    handedness: Handedness = Handedness.RIGHT,
    lead_in: int = 0,
    lead_out: int = 0,
) -> ReplayFile:
    """One gesture performance of ``template`` over ``frames`` frames.

    The gesture body carries signal=True on every frame. ``lead_in`` /
    ``lead_out`` prepend/append stationary signal=False frames so a
    replayed file produces a full rising+falling signal edge.
    """
    if frames < 2:
        raise ValueError("need at least 2 frames for a trajectory")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if template not in TRAJECTORY_TEMPLATES:
        raise UnknownTemplate(template)
    rng = np.random.default_rng(seed)
    # Seeded per-performance variation; keeps the template's shape
    # (monotone swipes stay monotone, circles stay closed).
    amp = _SWIPE_SPAN * rng.uniform(0.8, 1.2)
    u = np.linspace(0.0, 1.0, frames)
    offsets = _template_offset(template, u, amp)

    base = np.asarray(POSES["open_palm"], dtype=np.float64)
    coords = np.repeat(base[None, :, :], frames, axis=0)
    coords[:, :, 0] += offsets[:, 0, None]
    coords[:, :, 1] += offsets[:, 1, None]
    if noise_sigma > 0:
        coords = coords + rng.normal(0.0, noise_sigma, size=coords.shape)

    body = _frames_from_array(coords, handedness, signal=True)
    out: list[KeypointFrame] = []
    t = 0
    for _ in range(lead_in):
        out.append(KeypointFrame(body[0].landmarks, handedness, t, signal=False))
        t += FRAME_INTERVAL_MS
    for f in body:
        out.append(KeypointFrame(f.landmarks, handedness, t, signal=True))
        t += FRAME_INTERVAL_MS
    for _ in range(lead_out):
        out.append(KeypointFrame(body[-1].landmarks, handedness, t, signal=False))
        t += FRAME_INTERVAL_MS
    header = ReplayHeader(label=template, fps=SYNTH_FPS)
    return ReplayFile(header, tuple(out))
