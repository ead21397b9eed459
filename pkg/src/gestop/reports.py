"""Figure rendering for evaluation and training reports.

Every CLI report path writes the figure next to its CSV: eval produces
a confusion-matrix heatmap, training a loss/accuracy curve.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import ConfusionMatrix
from .training import TrainHistory


def save_confusion_matrix_png(cm: ConfusionMatrix, path: str | Path,
                              title: str = "Confusion matrix") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    c = len(cm.labels)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * c + 2), max(3.5, 0.6 * c + 1.5)))
    im = ax.imshow(cm.counts, cmap="Blues")
    ax.set_xticks(range(c), cm.labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(c), cm.labels, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"{title} (accuracy {cm.accuracy:.2%})")
    threshold = cm.counts.max() / 2 if cm.total else 0
    for i in range(c):
        for j in range(c):
            v = int(cm.counts[i, j])
            if v:
                ax.text(j, i, str(v), ha="center", va="center", fontsize=7,
                        color="white" if v > threshold else "black")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_training_curves_png(history: TrainHistory, path: str | Path,
                             title: str = "Training") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    epochs = [s.epoch for s in history.epochs]
    losses = [s.loss for s in history.epochs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, losses, label="train loss", color="tab:blue")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss", color="tab:blue")
    accs = [(s.epoch, s.val_accuracy) for s in history.epochs
            if s.val_accuracy is not None]
    if accs:
        ax2 = ax.twinx()
        ax2.plot(*zip(*accs), label="val accuracy", color="tab:orange")
        ax2.set_ylabel("val accuracy", color="tab:orange")
        ax2.set_ylim(0.0, 1.02)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
