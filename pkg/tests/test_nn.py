import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gestop.nn import (
    CalibrationConfig,
    DimensionMismatch,
    DynamicNet,
    StaticNet,
    calibrated_softmax,
    grad_check,
    softmax,
)


# ── independent reference implementations (oracles) ───────────────────


def ref_static_forward(params, x):
    """Two-layer product computed with explicit loops."""
    w1, b1, w2, b2 = params["w1"], params["b1"], params["w2"], params["b2"]
    hidden = []
    for j in range(w1.shape[1]):
        s = b1[j]
        for i in range(w1.shape[0]):
            s += x[i] * w1[i, j]
        hidden.append(max(s, 0.0))
    out = []
    for k in range(w2.shape[1]):
        s = b2[k]
        for j in range(w2.shape[0]):
            s += hidden[j] * w2[j, k]
        out.append(s)
    return np.array(out)


def ref_gru_direction(params, prefix, x_seq, g):
    """Step-by-step recurrence with the standard gate equations."""

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    h = np.zeros(g)
    for x in x_seq:
        r = sig(x @ params[f"{prefix}_wr"] + h @ params[f"{prefix}_ur"]
                + params[f"{prefix}_br"])
        z = sig(x @ params[f"{prefix}_wz"] + h @ params[f"{prefix}_uz"]
                + params[f"{prefix}_bz"])
        n = np.tanh(x @ params[f"{prefix}_wn"] + (r * h) @ params[f"{prefix}_un"]
                    + params[f"{prefix}_bn"])
        h = z * h + (1.0 - z) * n
    return h


def ref_dynamic_forward(net, seq):
    enc = seq @ net.params["we"] + net.params["be"]
    h_f = ref_gru_direction(net.params, "fwd", enc, net.hidden)
    h_b = ref_gru_direction(net.params, "bwd", enc[::-1], net.hidden)
    return np.concatenate([h_f, h_b]) @ net.params["wh"] + net.params["bh"]


# ── StaticNet ─────────────────────────────────────────────────────────


class TestStaticForward:
    def test_zero_weights_zero_logits(self):
        net = StaticNet(("a", "b", "c"), hidden=4)
        for k in net.params:
            net.params[k][:] = 0.0
        out = net.forward(np.ones(49))
        assert np.all(out == 0.0)

    def test_scaling_through_zero_net(self):
        net = StaticNet(("a", "b"), hidden=4)
        for k in net.params:
            net.params[k][:] = 0.0
        x = np.random.default_rng(0).normal(size=49)
        assert np.array_equal(net.forward(x), net.forward(2 * x))

    def test_matches_reference_product(self):
        rng = np.random.default_rng(99)
        net = StaticNet(("a", "b", "c", "d"), hidden=7, seed=99)
        x = rng.normal(size=49)
        assert np.allclose(net.forward(x), ref_static_forward(net.params, x),
                           atol=1e-12)

    def test_dimension_mismatch(self):
        net = StaticNet(("a", "b"))
        with pytest.raises(DimensionMismatch):
            net.forward(np.zeros(48))

    def test_batch_forward_matches_single(self):
        net = StaticNet(("a", "b", "c"), hidden=8, seed=1)
        xs = np.random.default_rng(2).normal(size=(5, 49))
        batch = net.forward(xs)
        for i in range(5):
            assert np.allclose(batch[i], net.forward(xs[i]))


# ── DynamicNet ────────────────────────────────────────────────────────


class TestDynamicForward:
    def _small_net(self, seed=5):
        return DynamicNet(("a", "b", "c"), encoder=2, hidden=2, seed=seed)

    def test_matches_reference_recurrence(self):
        net = self._small_net()
        seq = np.random.default_rng(3).normal(size=(3, 52))
        assert np.allclose(net.forward(seq), ref_dynamic_forward(net, seq),
                           atol=1e-12)

    def test_matches_reference_larger(self):
        net = DynamicNet(("a", "b", "c", "d", "e"), encoder=6, hidden=5, seed=11)
        seq = np.random.default_rng(4).normal(size=(9, 52))
        assert np.allclose(net.forward(seq), ref_dynamic_forward(net, seq),
                           atol=1e-12)

    def test_single_step_deterministic(self):
        net = self._small_net()
        seq = np.random.default_rng(0).normal(size=(1, 52))
        assert np.array_equal(net.forward(seq), net.forward(seq))

    def test_tied_directions_reversal_symmetry(self):
        # with both directions sharing weights, reversing the sequence
        # swaps the two halves of the concatenated final state
        net = self._small_net()
        for gate in ("wr", "wz", "wn", "ur", "uz", "un", "br", "bz", "bn"):
            net.params[f"bwd_{gate}"] = net.params[f"fwd_{gate}"].copy()
        seq = np.random.default_rng(8).normal(size=(6, 52))
        enc = seq @ net.params["we"] + net.params["be"]
        h_f, _ = net._gru_direction(enc, "fwd")
        h_b, _ = net._gru_direction(enc[::-1], "bwd")
        h_f2, _ = net._gru_direction(enc[::-1], "fwd")
        h_b2, _ = net._gru_direction(enc, "bwd")
        assert np.allclose(h_f, h_b2) and np.allclose(h_b, h_f2)

    def test_empty_sequence(self):
        net = self._small_net()
        from gestop.nn import EmptySequence

        with pytest.raises(EmptySequence):
            net.forward(np.zeros((0, 52)))

    def test_dimension_mismatch(self):
        net = self._small_net()
        with pytest.raises(DimensionMismatch):
            net.forward(np.zeros((3, 51)))


# ── softmax and calibration ───────────────────────────────────────────


class TestCalibratedSoftmax:
    def test_k1_is_identity(self):
        logits = np.array([0.5, 2.0, -1.0])
        plain, arg_plain = calibrated_softmax(logits, None)
        cal, arg_cal = calibrated_softmax(logits, CalibrationConfig(0, 1.0))
        assert np.allclose(plain, cal)
        assert arg_plain == arg_cal == 1

    def test_uniform_logits_k2_selects_none(self):
        logits = np.zeros(5)
        _, arg = calibrated_softmax(logits, CalibrationConfig(3, 2.0))
        assert arg == 3

    def test_constructed_flip_case(self):
        # softmax probs (none=0.4, best-other=0.5, rest=0.1): k=2 makes
        # none win 0.8 vs 0.5 before renormalization
        probs = np.array([0.4, 0.5, 0.1])
        logits = np.log(probs)
        _, arg_plain = calibrated_softmax(logits, None)
        assert arg_plain == 1
        p, arg = calibrated_softmax(logits, CalibrationConfig(0, 2.0))
        assert arg == 0
        assert p[0] == pytest.approx(0.8 / 1.4)

    def test_distribution_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            logits = rng.normal(scale=5, size=rng.integers(2, 10))
            cal = CalibrationConfig(0, float(rng.uniform(1, 10)))
            p, _ = calibrated_softmax(logits, cal)
            assert abs(p.sum() - 1.0) < 1e-9
            assert np.all(p >= 0)

    @given(
        st.lists(st.floats(-30, 30), min_size=2, max_size=8),
        st.floats(1.0, 50.0),
        st.floats(0.0, 50.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_monotonicity_property(self, logits, k, dk):
        # growing k can only keep the argmax or hand it to none
        logits = np.array(logits)
        cal_lo = CalibrationConfig(0, k)
        cal_hi = CalibrationConfig(0, k + dk)
        _, lo = calibrated_softmax(logits, cal_lo)
        _, hi = calibrated_softmax(logits, cal_hi)
        assert hi == lo or hi == 0

    def test_none_index_out_of_range(self):
        with pytest.raises(DimensionMismatch):
            calibrated_softmax(np.zeros(3), CalibrationConfig(5, 2.0))

    def test_k_below_one_rejected(self):
        with pytest.raises(ValueError):
            CalibrationConfig(0, 0.5)

    def test_softmax_extreme_logits(self):
        p = softmax(np.array([1000.0, 0.0, -1000.0]))
        assert math.isfinite(p.sum()) and abs(p.sum() - 1.0) < 1e-12


# ── gradient checks (finite-difference oracle) ────────────────────────


class TestGradCheck:
    def test_static_random(self):
        rng = np.random.default_rng(0)
        net = StaticNet(("a", "b", "c"), hidden=6, seed=0)
        err = grad_check(net, (rng.normal(size=49), 2))
        assert err < 1e-4

    def test_dynamic_random(self):
        rng = np.random.default_rng(1)
        net = DynamicNet(("a", "b", "c"), encoder=4, hidden=3, seed=1)
        err = grad_check(net, (rng.normal(size=(4, 52)), 1))
        assert err < 1e-4

    def test_zero_weights_no_nan(self):
        net = StaticNet(("a", "b"), hidden=4)
        for k in net.params:
            net.params[k][:] = 0.0
        err = grad_check(net, (np.ones(49), 0))
        assert math.isfinite(err) and err < 1e-4

    def test_zero_weight_dynamic_no_nan(self):
        net = DynamicNet(("a", "b"), encoder=3, hidden=2)
        for k in net.params:
            net.params[k][:] = 0.0
        err = grad_check(net, (np.ones((3, 52)), 1))
        assert math.isfinite(err) and err < 1e-4
