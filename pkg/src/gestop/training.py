"""Gradient-based training for the two classifier architectures.

Training is deterministic given TrainConfig.seed: parameter init, batch
shuffling and the optimizer state all derive from that one seed, so two
runs on the same data produce bit-identical weights.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .nn import DynamicNet, Params, StaticNet, softmax

log = logging.getLogger(__name__)


class SingleClassData(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    optimizer: str = "adam"  # "adam" or "sgd"

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    val_accuracy: float | None


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    @property
    def final_val_accuracy(self) -> float | None:
        return self.epochs[-1].val_accuracy if self.epochs else None

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch", "loss", "val_accuracy"])
            for s in self.epochs:
                w.writerow([s.epoch, repr(s.loss),
                            "" if s.val_accuracy is None else repr(s.val_accuracy)])


class _SGD:
    def __init__(self, lr: float) -> None:
        self.lr = lr

    def step(self, params: Params, grads: Params) -> None:
        for name in sorted(params):
            params[name] -= self.lr * grads[name]


class _Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8) -> None:
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: Params = {}
        self.v: Params = {}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for name in sorted(params):
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            params[name] -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


def _make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return _SGD(cfg.learning_rate)
    return _Adam(cfg.learning_rate)


def _accuracy_static(model: StaticNet, x: np.ndarray, y: np.ndarray) -> float:
    pred = np.argmax(model.forward(x), axis=-1)
    return float(np.mean(pred == y))


def _accuracy_dynamic(model: DynamicNet, seqs, y: np.ndarray) -> float:
    correct = sum(
        int(np.argmax(model.forward(s)) == label) for s, label in zip(seqs, y)
    )
    return correct / len(y)


def train(
    model: StaticNet | DynamicNet,
    x,
    y: np.ndarray,
    cfg: TrainConfig,
    val: tuple | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> TrainHistory:
    """Minimize mean cross-entropy by minibatch backpropagation.

    ``x`` is an N x 49 array for StaticNet or a sequence of T_i x 52
    arrays for DynamicNet; ``y`` holds integer class indices. ``val``
    is an optional (x, y) pair evaluated for accuracy after each epoch.
    ``on_epoch`` is invoked with each epoch's stats (used by the daemon
    to stream training progress).
    """
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassData("training data must contain at least two classes")
    is_static = isinstance(model, StaticNet)
    if is_static:
        x = np.asarray(x, dtype=np.float64)
        n = x.shape[0]
    else:
        x = [np.asarray(s, dtype=np.float64) for s in x]
        n = len(x)
    if n != len(y):
        raise ValueError("x and y length mismatch")

    rng = np.random.default_rng(cfg.seed)
    opt = _make_optimizer(cfg)
    history = TrainHistory()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if is_static:
                loss, grads = model.loss_and_grads(x[idx], y[idx])
            else:
                loss, grads = model.loss_and_grads([x[i] for i in idx], y[idx])
            opt.step(model.params, grads)
            epoch_loss += loss
            n_batches += 1
        val_acc = None
        if val is not None:
            vx, vy = val
            vy = np.asarray(vy, dtype=np.int64)
            val_acc = (
                _accuracy_static(model, np.asarray(vx, dtype=np.float64), vy)
                if is_static
                else _accuracy_dynamic(model, vx, vy)
            )
        stats = EpochStats(epoch, epoch_loss / max(n_batches, 1), val_acc)
        history.epochs.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
        log.debug("epoch %d loss=%.5f val_acc=%s", epoch, stats.loss, val_acc)
    return history


def predict_proba_static(model: StaticNet, x: np.ndarray) -> np.ndarray:
    return softmax(model.forward(x))
