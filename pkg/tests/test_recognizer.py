import numpy as np
import pytest

from gestop.core import CursorMove, GestureKind, Handedness, KeypointFrame
from gestop.features import static_feature
from gestop.nn import CalibrationConfig, DynamicNet, StaticNet
from gestop.recognizer import Recognizer, RecognizerConfig
from gestop.synth import POSES, synth_static

from conftest import make_frame, random_frame


def pose_frame(name, t=0, signal=False, handedness=Handedness.RIGHT):
    return KeypointFrame(POSES[name], handedness, t, signal)


def trained_static_model():
    """Tiny model that provably separates two library poses plus none."""
    from gestop.training import TrainConfig, train

    labels = ("fist", "none", "open_palm")
    x, y = [], []
    for i, name in enumerate(labels):
        rf = synth_static(name, 80, 0.01, seed=10 + i)
        for f in rf.frames:
            x.append(static_feature(f))
            y.append(i)
    model = StaticNet(labels, hidden=16, seed=0)
    train(model, np.array(x), np.array(y), TrainConfig(epochs=40, seed=0))
    return model


MODEL = trained_static_model()
DYN_MODEL = DynamicNet(("circle", "swipe_left", "swipe_right"),
                       encoder=4, hidden=4, seed=2)


def make_recognizer(stability=5, min_seg=10, alpha=0.5, dynamic=DYN_MODEL):
    cfg = RecognizerConfig(stability_frames=stability, min_segment_frames=min_seg,
                           ema_alpha=alpha)
    return Recognizer(MODEL, dynamic, cfg, None)


def gestures(events):
    return [e for e in events if not e.is_cursor]


class TestStaticDebounce:
    def test_one_event_at_exactly_s(self):
        rec = make_recognizer(stability=5)
        all_events = []
        for i in range(20):
            all_events.append(gestures(rec.process_frame(pose_frame("open_palm", t=i))))
        counts = [len(ev) for ev in all_events]
        assert counts[4] == 1  # frame 5 (index 4) fires
        assert sum(counts) == 1
        event = all_events[4][0]
        assert event.label.name == "open_palm"
        assert event.label.kind is GestureKind.STATIC
        assert event.source_frame_count == 1

    def test_reemission_after_streak_break(self):
        rec = make_recognizer(stability=3)
        events = []
        stream = ["open_palm"] * 6 + ["fist"] * 6 + ["open_palm"] * 4
        for i, name in enumerate(stream):
            events.extend(gestures(rec.process_frame(pose_frame(name, t=i))))
        assert [e.label.name for e in events] == ["open_palm", "fist", "open_palm"]

    def test_any_n_at_least_s_fires_once(self):
        for n in (5, 6, 13, 40):
            rec = make_recognizer(stability=5)
            total = []
            for i in range(n):
                total.extend(gestures(rec.process_frame(pose_frame("fist", t=i))))
            assert len(total) == 1, n

    def test_none_never_fires(self):
        rec = make_recognizer(stability=1)
        events = []
        rng = np.random.default_rng(0)
        for i in range(30):
            events.extend(gestures(rec.process_frame(
                pose_frame("fist", t=i) if False else random_frame(rng, t=i))))
        assert all(e.label.name != "none" for e in events)


class TestSegmentation:
    def test_segment_boundaries(self):
        rec = make_recognizer(min_seg=10)
        events = []
        for i in range(50):
            signal = 10 <= i < 40
            events.extend(gestures(rec.process_frame(
                pose_frame("open_palm", t=i, signal=signal))))
        dyn = [e for e in events if e.label.kind is GestureKind.DYNAMIC]
        assert len(dyn) == 1
        assert dyn[0].source_frame_count == 30
        assert dyn[0].timestamp_ms == 40  # emitted on the falling edge

    def test_short_run_discarded(self):
        rec = make_recognizer(min_seg=10)
        events = []
        for i in range(10):
            signal = i in (2, 3, 4)
            events.extend(gestures(rec.process_frame(
                pose_frame("open_palm", t=i, signal=signal))))
        assert [e for e in events if e.label.kind is GestureKind.DYNAMIC] == []
        assert rec.state.discarded_segments == 1

    def test_static_suppressed_while_signal_on(self):
        rec = make_recognizer(stability=2, min_seg=5)
        static_events = []
        for i in range(30):
            evs = gestures(rec.process_frame(pose_frame("open_palm", t=i, signal=True)))
            static_events.extend(e for e in evs if e.label.kind is GestureKind.STATIC)
        assert static_events == []

    def test_random_patterns_property(self, rng):
        # dynamic event count == number of maximal runs of length >= min
        for trial in range(60):
            min_seg = int(rng.integers(2, 8))
            rec = make_recognizer(min_seg=min_seg)
            flags = rng.random(80) < 0.4
            expected = 0
            run = 0
            for flag in flags:
                if flag:
                    run += 1
                else:
                    if run >= min_seg:
                        expected += 1
                    run = 0
            if run >= min_seg:
                expected += 1
            got = 0
            for i, flag in enumerate(flags):
                evs = gestures(rec.process_frame(
                    pose_frame("open_palm", t=i, signal=bool(flag))))
                got += sum(e.label.kind is GestureKind.DYNAMIC for e in evs)
            got += len(rec.flush(timestamp_ms=len(flags)))
            assert got == expected

    def test_determinism(self, rng):
        frames = [random_frame(rng, t=i, signal=bool(rng.random() < 0.3))
                  for i in range(100)]
        runs = []
        for _ in range(2):
            rec = make_recognizer(min_seg=4)
            events = []
            for f in frames:
                events.extend(rec.process_frame(f))
            runs.append(events)
        assert runs[0] == runs[1]


class TestMouseTrack:
    def test_direct_projection_first_observation(self):
        rec = make_recognizer()
        pts = [[0.1, 0.1, 0.0]] * 21
        pts[8] = [0.5, 0.5, 0.0]
        event = rec.process_frame(make_frame(landmarks=pts))[0]
        assert isinstance(event.label, CursorMove)
        assert (event.label.x_px, event.label.y_px) == (960, 540)

    def test_ema_blend(self):
        rec = make_recognizer(alpha=0.5)
        rec.state.cursor = (0.0, 0.0)
        pts = [[0.0, 0.0, 0.0]] * 21
        pts[8] = [100 / 1920, 200 / 1080, 0.0]
        event = rec.mouse_track(make_frame(landmarks=pts))
        assert (event.label.x_px, event.label.y_px) == (50, 100)

    def test_clamped_before_smoothing(self):
        rec = make_recognizer(alpha=1.0)
        pts = [[0.0, 0.0, 0.0]] * 21
        pts[8] = [1.2, -0.1, 0.0]
        event = rec.mouse_track(make_frame(landmarks=pts))
        assert (event.label.x_px, event.label.y_px) == (1920, 0)

    def test_cursor_always_in_bounds(self, rng):
        rec = make_recognizer(alpha=0.7)
        for i in range(200):
            pts = rng.uniform(-0.5, 1.5, size=(21, 3))
            frame = make_frame(landmarks=[tuple(map(float, p)) for p in pts], t=i)
            event = rec.mouse_track(frame)
            assert 0 <= event.label.x_px <= 1920
            assert 0 <= event.label.y_px <= 1080

    def test_every_frame_emits_cursor(self, rng):
        rec = make_recognizer()
        for i in range(20):
            events = rec.process_frame(random_frame(rng, t=i,
                                                    signal=bool(i % 3 == 0)))
            assert events[0].is_cursor


class TestCalibrationWiring:
    def test_calibration_suppresses_weak_static(self):
        # with a huge k, everything classifies as none: no static events
        none_idx = MODEL.labels.index("none")
        cfg = RecognizerConfig(stability_frames=1)
        rec = Recognizer(MODEL, None, cfg, CalibrationConfig(none_idx, 1e9))
        events = []
        for i in range(10):
            events.extend(gestures(rec.process_frame(pose_frame("open_palm", t=i))))
        assert events == []
