"""gestop: real-time hand-gesture recognition daemon and toolkit."""

from .core import (
    CursorMove,
    GestureEvent,
    GestureKind,
    GestureLabel,
    Handedness,
    KeypointFrame,
    NONE_LABEL,
    validate_frame,
)
from .nn import CalibrationConfig, DynamicNet, StaticNet, calibrated_softmax
from .recognizer import Recognizer, RecognizerConfig
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "CalibrationConfig",
    "CursorMove",
    "DynamicNet",
    "GestureEvent",
    "GestureKind",
    "GestureLabel",
    "Handedness",
    "KeypointFrame",
    "NONE_LABEL",
    "Recognizer",
    "RecognizerConfig",
    "StaticNet",
    "TrainConfig",
    "calibrated_softmax",
    "train",
    "validate_frame",
    "__version__",
]
