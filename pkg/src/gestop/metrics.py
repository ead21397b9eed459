"""Evaluation: confusion matrix and accuracy."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import DynamicDataset, StaticDataset
from .features import dynamic_features, static_features_from_coords
from .nn import CalibrationConfig, DynamicNet, StaticNet, softmax


class UnknownLabel(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """C x C counts; rows are true labels, columns predictions."""

    labels: tuple[str, ...]
    counts: np.ndarray  # int64

    def __post_init__(self) -> None:
        c = len(self.labels)
        if self.counts.shape != (c, c):
            raise ValueError("counts shape does not match label count")
        if np.any(self.counts < 0):
            raise ValueError("negative count")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0

    def per_class_accuracy(self) -> dict[str, float]:
        out = {}
        for i, label in enumerate(self.labels):
            row = self.counts[i].sum()
            out[label] = float(self.counts[i, i]) / row if row else float("nan")
        return out

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow([""] + list(self.labels))
            for i, label in enumerate(self.labels):
                w.writerow([label] + [int(v) for v in self.counts[i]])


def _check_labels(model_labels: tuple[str, ...], dataset_labels) -> dict[str, int]:
    index = {name: i for i, name in enumerate(model_labels)}
    unknown = set(dataset_labels) - set(index)
    if unknown:
        raise UnknownLabel(f"dataset labels not in model: {sorted(unknown)}")
    return index


def evaluate_static(
    model: StaticNet,
    dataset: StaticDataset,
    cal: CalibrationConfig | None = None,
) -> ConfusionMatrix:
    index = _check_labels(model.labels, dataset.labels)
    c = len(model.labels)
    counts = np.zeros((c, c), dtype=np.int64)
    if len(dataset) == 0:
        return ConfusionMatrix(model.labels, counts)
    hand_values = np.array([h.feature_value for h in dataset.handedness])
    x = static_features_from_coords(dataset.coords, hand_values)
    probs = softmax(model.forward(x))
    if cal is not None:
        probs[:, cal.none_index] *= cal.k
    pred = np.argmax(probs, axis=-1)
    for true_label, p in zip(dataset.labels, pred):
        counts[index[true_label], p] += 1
    return ConfusionMatrix(model.labels, counts)


def evaluate_dynamic(
    model: DynamicNet,
    dataset: DynamicDataset,
    cal: CalibrationConfig | None = None,
) -> ConfusionMatrix:
    index = _check_labels(model.labels, dataset.labels)
    c = len(model.labels)
    counts = np.zeros((c, c), dtype=np.int64)
    for seq, true_label in zip(dataset.sequences, dataset.labels):
        probs = softmax(model.forward(dynamic_features(seq)))
        if cal is not None:
            probs[cal.none_index] *= cal.k
        counts[index[true_label], int(np.argmax(probs))] += 1
    return ConfusionMatrix(model.labels, counts)


def evaluate(model, dataset, cal: CalibrationConfig | None = None) -> ConfusionMatrix:
    """One argmax prediction per sample (calibrated if cal is given)."""
    if isinstance(model, StaticNet):
        return evaluate_static(model, dataset, cal)
    return evaluate_dynamic(model, dataset, cal)
