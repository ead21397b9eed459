import numpy as np

from gestop.metrics import ConfusionMatrix
from gestop.reports import save_confusion_matrix_png, save_training_curves_png
from gestop.training import EpochStats, TrainHistory


def test_confusion_matrix_png(tmp_path):
    cm = ConfusionMatrix(("a", "b", "c"),
                         np.array([[5, 1, 0], [0, 6, 0], [1, 0, 4]]))
    out = tmp_path / "cm.png"
    save_confusion_matrix_png(cm, out)
    data = out.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


def test_training_curve_png(tmp_path):
    history = TrainHistory([
        EpochStats(1, 1.2, 0.5),
        EpochStats(2, 0.7, 0.8),
        EpochStats(3, 0.4, 0.95),
    ])
    out = tmp_path / "curve.png"
    save_training_curves_png(history, out)
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_training_curve_without_validation(tmp_path):
    history = TrainHistory([EpochStats(1, 1.0, None), EpochStats(2, 0.5, None)])
    out = tmp_path / "curve.png"
    save_training_curves_png(history, out)
    assert out.exists()
