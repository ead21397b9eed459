"""Dataset recording, parsing and splitting.

Static datasets are headerless CSV, one sample per row:
    x0,y0,z0,...,x20,y20,z20,<L|R>,<label>       (65 columns)

Dynamic datasets are directory trees of replay files, one sequence per
file, grouped by label:
    <root>/<label>/seq_00000.gr

The SHREC'17 track layout is adapted through a fixed 22 -> 21 joint
mapping (the distribution's palm-center joint is dropped; see
docs/shrec-mapping.md). World coordinates are kept as-is: the relative
features are translation invariant, only the absolute palm columns
carry the scale difference.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import Handedness, KeypointFrame, NUM_LANDMARKS, validate_frame
from .synth import FRAME_INTERVAL_MS
from .wire import read_replay, write_replay

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    pass


class ClassTooSmall(DatasetError):
    pass


class MissingIndexFile(FileNotFoundError):
    pass


class MalformedSkeletonLine(DatasetError):
    pass


# ── Static dataset ────────────────────────────────────────────────────


@dataclass
class StaticDataset:
    """Raw keypoint rows with handedness and label, in file order."""

    coords: np.ndarray          # N x 63 float64
    handedness: list[Handedness]
    labels: list[str]

    def __post_init__(self) -> None:
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(
            -1, NUM_LANDMARKS * 3
        )
        if not np.all(np.isfinite(self.coords)):
            raise DatasetError("non-finite coordinate in static dataset")
        if any(not l for l in self.labels):
            raise DatasetError("empty label in static dataset")
        if not (len(self.handedness) == len(self.labels) == len(self.coords)):
            raise DatasetError("column length mismatch")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx: Sequence[int]) -> "StaticDataset":
        return StaticDataset(
            self.coords[list(idx)],
            [self.handedness[i] for i in idx],
            [self.labels[i] for i in idx],
        )

    def label_set(self) -> list[str]:
        return sorted(set(self.labels))

    @staticmethod
    def empty() -> "StaticDataset":
        return StaticDataset(np.empty((0, 63)), [], [])

    @staticmethod
    def from_frames(pairs: Iterable[tuple[KeypointFrame, str]]) -> "StaticDataset":
        coords, hands, labels = [], [], []
        for frame, label in pairs:
            coords.append(np.asarray(frame.landmarks, dtype=np.float64).reshape(-1))
            hands.append(frame.handedness)
            labels.append(label)
        if not coords:
            return StaticDataset.empty()
        return StaticDataset(np.vstack(coords), hands, labels)


def load_static_csv(path: str | Path) -> StaticDataset:
    path = Path(path)
    coords, hands, labels = [], [], []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if len(row) != 65:
                raise DatasetError(f"{path}:{lineno}: expected 65 columns, got {len(row)}")
            try:
                values = [float(v) for v in row[:63]]
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: unparseable coordinate") from None
            if row[63] not in ("L", "R"):
                raise DatasetError(f"{path}:{lineno}: bad handedness {row[63]!r}")
            coords.append(values)
            hands.append(Handedness(row[63]))
            labels.append(row[64])
    if not coords:
        return StaticDataset.empty()
    return StaticDataset(np.asarray(coords), hands, labels)


def append_static_csv(path: str | Path,
                      pairs: Iterable[tuple[KeypointFrame, str]]) -> int:
    """Append rows; creates the file (and parents) on first use."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "a", newline="") as f:
        w = csv.writer(f)
        for frame, label in pairs:
            row = [repr(float(c)) for p in frame.landmarks for c in p]
            row.append(frame.handedness.value)
            row.append(label)
            w.writerow(row)
            n += 1
    return n


def record_static(label: str, frames: Iterable[KeypointFrame], n: int,
                  path: str | Path) -> int:
    """Append the first n frames from the source, labeled; returns count."""
    if n < 1:
        raise ValueError("n must be >= 1")
    taken = []
    for frame in frames:
        taken.append((frame, label))
        if len(taken) == n:
            break
    return append_static_csv(path, taken)


# ── Dynamic dataset ───────────────────────────────────────────────────


@dataclass
class DynamicDataset:
    sequences: list[tuple[KeypointFrame, ...]]
    labels: list[str]

    def __post_init__(self) -> None:
        if len(self.sequences) != len(self.labels):
            raise DatasetError("sequence/label length mismatch")
        if any(len(s) < 1 for s in self.sequences):
            raise DatasetError("empty sequence in dynamic dataset")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx: Sequence[int]) -> "DynamicDataset":
        return DynamicDataset(
            [self.sequences[i] for i in idx], [self.labels[i] for i in idx]
        )

    def label_set(self) -> list[str]:
        return sorted(set(self.labels))


def save_dynamic_dir(dataset: DynamicDataset, root: str | Path) -> None:
    root = Path(root)
    counters: dict[str, int] = {}
    for seq, label in zip(dataset.sequences, dataset.labels):
        i = counters.get(label, 0)
        counters[label] = i + 1
        write_replay(root / label / f"seq_{i:05d}.gr", seq, label=label)


def load_dynamic_dir(root: str | Path) -> DynamicDataset:
    root = Path(root)
    sequences, labels = [], []
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for seq_file in sorted(label_dir.glob("*.gr")):
            rf = read_replay(seq_file)
            if not rf.frames:
                continue
            sequences.append(rf.frames)
            labels.append(rf.header.label or label_dir.name)
    return DynamicDataset(sequences, labels)


def segment_signal_runs(
    frames: Iterable[KeypointFrame], min_frames: int
) -> Iterator[tuple[KeypointFrame, ...]]:
    """Maximal signal-on runs of at least min_frames, in stream order."""
    run: list[KeypointFrame] = []
    for frame in frames:
        if frame.signal:
            run.append(frame)
        elif run:
            if len(run) >= min_frames:
                yield tuple(run)
            else:
                log.warning("skipping %d-frame run (< %d)", len(run), min_frames)
            run = []
    if run:
        if len(run) >= min_frames:
            yield tuple(run)
        else:
            log.warning("skipping %d-frame run (< %d)", len(run), min_frames)


def record_dynamic(
    label: str,
    frames: Iterable[KeypointFrame],
    out_dir: str | Path,
    min_segment_frames: int = 10,
) -> list[Path]:
    """Store each qualifying signal run as one labeled sequence file."""
    out_dir = Path(out_dir) / label
    out_dir.mkdir(parents=True, exist_ok=True)
    existing = len(list(out_dir.glob("seq_*.gr")))
    written = []
    for i, run in enumerate(segment_signal_runs(frames, min_segment_frames)):
        path = out_dir / f"seq_{existing + i:05d}.gr"
        write_replay(path, run, label=label)
        written.append(path)
    return written


# ── SHREC'17 adapter ──────────────────────────────────────────────────

SHREC_GESTURE_NAMES = (
    "Grab", "Tap", "Expand", "Pinch", "Rotation CW", "Rotation CCW",
    "Swipe Right", "Swipe Left", "Swipe Up", "Swipe Down",
    "Swipe X", "Swipe +", "Swipe V", "Shake",
)

# SHREC'17 skeletons carry 22 joints: wrist, palm center, then four
# joints per finger chain. Landmark k comes from SHREC joint
# SHREC_JOINT_MAP[k]; the palm-center joint (1) is dropped.
SHREC_JOINT_MAP = (0,) + tuple(range(2, 22))

_SHREC_INDEX_FILES = ("train_gestures.txt", "test_gestures.txt")


def _parse_skeleton_file(path: Path) -> tuple[KeypointFrame, ...]:
    frames = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 66:
                raise MalformedSkeletonLine(
                    f"{path}:{lineno}: expected 66 floats (22 joints), got {len(parts)}"
                )
            try:
                values = np.array([float(v) for v in parts]).reshape(22, 3)
            except ValueError:
                raise MalformedSkeletonLine(
                    f"{path}:{lineno}: unparseable coordinate"
                ) from None
            landmarks = values[list(SHREC_JOINT_MAP)]
            frames.append(
                validate_frame(
                    landmarks, Handedness.RIGHT,
                    timestamp_ms=(lineno - 1) * FRAME_INTERVAL_MS,
                    signal=True, warn=False,
                )
            )
    return tuple(frames)


def parse_shrec(root: str | Path) -> DynamicDataset:
    """Load every sequence listed in the distribution's index files."""
    root = Path(root)
    sequences, labels = [], []
    found_any = False
    for index_name in _SHREC_INDEX_FILES:
        index_path = root / index_name
        if not index_path.exists():
            continue
        found_any = True
        with open(index_path) as f:
            for line in f:
                parts = line.split()
                if len(parts) < 5:
                    continue
                g, fi, su, es = parts[0], parts[1], parts[2], parts[3]
                label_14 = int(parts[4])
                seq_path = (
                    root / f"gesture_{g}" / f"finger_{fi}" / f"subject_{su}"
                    / f"essai_{es}" / "skeletons_world.txt"
                )
                sequences.append(_parse_skeleton_file(seq_path))
                labels.append(SHREC_GESTURE_NAMES[label_14 - 1])
    if not found_any:
        raise MissingIndexFile(
            f"no {' or '.join(_SHREC_INDEX_FILES)} under {root}"
        )
    return DynamicDataset(sequences, labels)


# ── Splitting ─────────────────────────────────────────────────────────


def split_indices(
    labels: Sequence[str], val_fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Stratified, deterministic, disjoint and exhaustive index split."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    by_label: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_label.setdefault(label, []).append(i)
    train_idx: list[int] = []
    val_idx: list[int] = []
    for label in sorted(by_label):
        idx = by_label[label]
        if len(idx) < 2:
            raise ClassTooSmall(f"class {label!r} has {len(idx)} sample(s)")
        order = rng.permutation(len(idx))
        n_val = min(max(int(round(len(idx) * val_fraction)), 1), len(idx) - 1)
        val_idx.extend(idx[j] for j in order[:n_val])
        train_idx.extend(idx[j] for j in order[n_val:])
    return sorted(train_idx), sorted(val_idx)


def split(dataset, val_fraction: float, seed: int):
    """(train, val) datasets, stratified by label."""
    train_idx, val_idx = split_indices(dataset.labels, val_fraction, seed)
    return dataset.subset(train_idx), dataset.subset(val_idx)


# ── Synthetic dataset builders (desk-scale stand-ins) ─────────────────


def build_synthetic_static(
    samples_per_class: int = 2000,
    noise_sigma: float = 0.02,
    seed: int = 42,
    poses: Sequence[str] | None = None,
    include_none: bool = True,
) -> StaticDataset:
    """Labeled pose dataset from the built-in generators; deterministic."""
    from . import synth

    names = list(poses if poses is not None else synth.STATIC_POSE_NAMES)
    if include_none:
        names.append(synth.CLUTTER_POSE)
    pairs: list[tuple[KeypointFrame, str]] = []
    for class_i, name in enumerate(names):
        # both hands per class, so handedness never looks discriminative
        n_right = samples_per_class - samples_per_class // 2
        for handedness, n in ((Handedness.RIGHT, n_right),
                              (Handedness.LEFT, samples_per_class // 2)):
            if n == 0:
                continue
            rf = synth.synth_static(
                name, n, noise_sigma,
                seed=seed + 1000 * class_i + (0 if handedness is Handedness.RIGHT else 500),
                handedness=handedness,
            )
            pairs.extend((frame, name) for frame in rf.frames)
    return StaticDataset.from_frames(pairs)


def build_synthetic_dynamic(
    sequences_per_class: int = 120,
    frames_per_sequence: int = 20,
    noise_sigma: float = 0.01,
    seed: int = 42,
) -> DynamicDataset:
    """Labeled trajectory dataset covering every built-in template."""
    from . import synth

    sequences, labels = [], []
    for class_i, template in enumerate(synth.TRAJECTORY_TEMPLATES):
        for j in range(sequences_per_class):
            rf = synth.synth_dynamic(
                template, frames_per_sequence, noise_sigma,
                seed=seed + 10_000 * class_i + j,
            )
            sequences.append(rf.frames)
            labels.append(template)
    return DynamicDataset(sequences, labels)
