import numpy as np
import pytest

from gestop.core import Handedness, KeypointFrame


def make_frame(fill=0.0, handedness=Handedness.RIGHT, t=0, signal=False,
               landmarks=None):
    if landmarks is None:
        landmarks = tuple((fill, fill, fill) for _ in range(21))
    return KeypointFrame(tuple(landmarks), handedness, t, signal)


def random_frame(rng: np.random.Generator, t=0, signal=False,
                 handedness=None) -> KeypointFrame:
    pts = rng.uniform(0.0, 1.0, size=(21, 3))
    pts[:, 2] = rng.uniform(-0.1, 0.1, size=21)
    if handedness is None:
        handedness = Handedness.RIGHT if rng.random() < 0.5 else Handedness.LEFT
    landmarks = tuple((float(x), float(y), float(z)) for x, y, z in pts)
    return KeypointFrame(landmarks, handedness, t, signal)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
