"""Minimal neural-network engine: dense layers, bidirectional GRU,
softmax/cross-entropy with hand-written backward passes.

Two architectures only:

- StaticNet: dense(49 -> H) + ReLU + dense(H -> C) over pose features.
- DynamicNet: affine encoder(52 -> E) -> bidirectional GRU(G per
  direction) -> dense(2G -> C) over the concatenated final hidden states
  of both directions.

GRU recurrence (update gate z, reset gate r, candidate n), h_{-1} = 0:

    r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
    z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
    n_t = tanh(x_t Wn + (r_t * h_{t-1}) Un + bn)
    h_t = z_t * h_{t-1} + (1 - z_t) * n_t

All parameters and gradients are float64; gradients are checked against
central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Params = dict[str, np.ndarray]


class DimensionMismatch(ValueError):
    pass


class EmptySequence(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationConfig:
    """Post-softmax boost of the reserved none class by a factor k >= 1."""

    none_index: int
    k: float = 2.0

    def __post_init__(self) -> None:
        if self.k < 1.0:
            raise ValueError(f"calibration constant k={self.k} must be >= 1")
        if self.none_index < 0:
            raise ValueError("none_index must be a valid class index")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def calibrated_softmax(
    logits: np.ndarray, cal: CalibrationConfig | None = None
) -> tuple[np.ndarray, int]:
    """Probability distribution and argmax index, with the none class
    amplified by cal.k and the result renormalized.

    Scaling happens on the probability (not the logit), so the relative
    order of all non-none classes is preserved exactly for any k.
    """
    p = softmax(np.asarray(logits, dtype=np.float64))
    if cal is not None:
        if cal.none_index >= p.shape[-1]:
            raise DimensionMismatch(
                f"none_index {cal.none_index} out of range for {p.shape[-1]} classes"
            )
        p = p.copy()
        p[..., cal.none_index] *= cal.k
        p /= np.sum(p, axis=-1, keepdims=True)
    return p, int(np.argmax(p, axis=-1))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_finite(params: Params) -> None:
    for name, value in params.items():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"non-finite weights in {name}")


def cross_entropy_grad(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch of logits and its gradient."""
    p = softmax(logits)
    n = logits.shape[0]
    eps = np.finfo(np.float64).tiny
    loss = -float(np.mean(np.log(p[np.arange(n), y] + eps)))
    grad = p
    grad[np.arange(n), y] -= 1.0
    return loss, grad / n


class StaticNet:
    """Two-layer pose classifier over 49-dim static features."""

    kind = "static"

    def __init__(self, labels: tuple[str, ...] | list[str],
                 input_dim: int = 49, hidden: int = 64, seed: int = 0,
                 params: Params | None = None) -> None:
        if len(labels) < 1:
            raise ValueError("need at least one label")
        self.labels = tuple(labels)
        self.input_dim = input_dim
        self.hidden = hidden
        if params is not None:
            self.params = params
        else:
            rng = np.random.default_rng(seed)
            c = len(self.labels)
            self.params = {
                "w1": _glorot(rng, input_dim, hidden),
                "b1": np.zeros(hidden),
                "w2": _glorot(rng, hidden, c),
                "b2": np.zeros(c),
            }
        _check_finite(self.params)

    @property
    def sizes(self) -> dict[str, int]:
        return {"input_dim": self.input_dim, "hidden": self.hidden,
                "classes": len(self.labels)}

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for one feature vector or a batch (last axis = 49)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise DimensionMismatch(
                f"expected input dim {self.input_dim}, got {x.shape[-1]}"
            )
        h = _relu(x @ self.params["w1"] + self.params["b1"])
        return h @ self.params["w2"] + self.params["b2"]

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> tuple[float, Params]:
        """Mean cross-entropy over a batch and gradients for every parameter."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionMismatch(f"expected batch of {self.input_dim}-dim rows")
        p = self.params
        a1 = x @ p["w1"] + p["b1"]
        h = _relu(a1)
        logits = h @ p["w2"] + p["b2"]
        loss, dlogits = cross_entropy_grad(logits, y)
        grads: Params = {}
        grads["w2"] = h.T @ dlogits
        grads["b2"] = dlogits.sum(axis=0)
        dh = dlogits @ p["w2"].T
        da1 = dh * (a1 > 0)
        grads["w1"] = x.T @ da1
        grads["b1"] = da1.sum(axis=0)
        return loss, grads


class DynamicNet:
    """Sequence classifier: affine encoder + bidirectional GRU + head."""

    kind = "dynamic"

    _GATE_NAMES = ("wr", "wz", "wn", "ur", "uz", "un", "br", "bz", "bn")

    def __init__(self, labels: tuple[str, ...] | list[str],
                 input_dim: int = 52, encoder: int = 32, hidden: int = 64,
                 seed: int = 0, params: Params | None = None) -> None:
        if len(labels) < 1:
            raise ValueError("need at least one label")
        self.labels = tuple(labels)
        self.input_dim = input_dim
        self.encoder = encoder
        self.hidden = hidden
        if params is not None:
            self.params = params
        else:
            rng = np.random.default_rng(seed)
            c = len(self.labels)
            e, g = encoder, hidden
            self.params = {"we": _glorot(rng, input_dim, e), "be": np.zeros(e)}
            for d in ("fwd", "bwd"):
                for gate in ("r", "z", "n"):
                    self.params[f"{d}_w{gate}"] = _glorot(rng, e, g)
                    self.params[f"{d}_u{gate}"] = _glorot(rng, g, g)
                    self.params[f"{d}_b{gate}"] = np.zeros(g)
            self.params["wh"] = _glorot(rng, 2 * g, c)
            self.params["bh"] = np.zeros(c)
        _check_finite(self.params)

    @property
    def sizes(self) -> dict[str, int]:
        return {"input_dim": self.input_dim, "encoder": self.encoder,
                "hidden": self.hidden, "classes": len(self.labels)}

    # ── forward ───────────────────────────────────────────────────

    def _gru_direction(self, x: np.ndarray, d: str):
        """Run one direction over encoded steps x (T x E).

        Returns the final hidden state and the per-step cache needed
        for backpropagation through time.
        """
        p = self.params
        t_len = x.shape[0]
        g = self.hidden
        h = np.zeros(g)
        h_prev = np.empty((t_len, g))
        rs = np.empty((t_len, g))
        zs = np.empty((t_len, g))
        ns = np.empty((t_len, g))
        for t in range(t_len):
            h_prev[t] = h
            r = _sigmoid(x[t] @ p[f"{d}_wr"] + h @ p[f"{d}_ur"] + p[f"{d}_br"])
            z = _sigmoid(x[t] @ p[f"{d}_wz"] + h @ p[f"{d}_uz"] + p[f"{d}_bz"])
            n = np.tanh(x[t] @ p[f"{d}_wn"] + (r * h) @ p[f"{d}_un"] + p[f"{d}_bn"])
            h = z * h + (1.0 - z) * n
            rs[t], zs[t], ns[t] = r, z, n
        return h, (x, h_prev, rs, zs, ns)

    def _encode(self, seq: np.ndarray) -> np.ndarray:
        seq = np.asarray(seq, dtype=np.float64)
        if seq.ndim != 2 or seq.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"expected T x {self.input_dim} sequence, got shape {seq.shape}"
            )
        if seq.shape[0] < 1:
            raise EmptySequence("sequence must have at least one frame")
        return seq @ self.params["we"] + self.params["be"]

    def forward(self, seq: np.ndarray) -> np.ndarray:
        """Logits for one T x 52 feature sequence."""
        x = self._encode(seq)
        h_f, _ = self._gru_direction(x, "fwd")
        h_b, _ = self._gru_direction(x[::-1], "bwd")
        return np.concatenate([h_f, h_b]) @ self.params["wh"] + self.params["bh"]

    # ── backward ──────────────────────────────────────────────────

    def _gru_backward(self, dh_final: np.ndarray, cache, d: str,
                      grads: Params) -> np.ndarray:
        """BPTT for one direction; accumulates into grads, returns dX."""
        p = self.params
        x, h_prev, rs, zs, ns = cache
        t_len = x.shape[0]
        dx = np.empty_like(x)
        dh = dh_final
        for t in range(t_len - 1, -1, -1):
            r, z, n, hp = rs[t], zs[t], ns[t], h_prev[t]
            dz = dh * (hp - n)
            dn = dh * (1.0 - z)
            dh_prev = dh * z
            # candidate: n = tanh(x Wn + (r*hp) Un + bn)
            dan = dn * (1.0 - n * n)
            grads[f"{d}_wn"] += np.outer(x[t], dan)
            grads[f"{d}_un"] += np.outer(r * hp, dan)
            grads[f"{d}_bn"] += dan
            drh = dan @ p[f"{d}_un"].T
            dr = drh * hp
            dh_prev = dh_prev + drh * r
            # update gate
            daz = dz * z * (1.0 - z)
            grads[f"{d}_wz"] += np.outer(x[t], daz)
            grads[f"{d}_uz"] += np.outer(hp, daz)
            grads[f"{d}_bz"] += daz
            dh_prev = dh_prev + daz @ p[f"{d}_uz"].T
            # reset gate
            dar = dr * r * (1.0 - r)
            grads[f"{d}_wr"] += np.outer(x[t], dar)
            grads[f"{d}_ur"] += np.outer(hp, dar)
            grads[f"{d}_br"] += dar
            dh_prev = dh_prev + dar @ p[f"{d}_ur"].T
            dx[t] = dan @ p[f"{d}_wn"].T + daz @ p[f"{d}_wz"].T + dar @ p[f"{d}_wr"].T
            dh = dh_prev
        return dx

    def loss_and_grads(self, seqs, y) -> tuple[float, Params]:
        """Mean cross-entropy over a batch of variable-length sequences."""
        y = np.asarray(y, dtype=np.int64)
        if len(seqs) != len(y):
            raise DimensionMismatch("batch size mismatch between seqs and labels")
        if len(seqs) == 0:
            raise EmptySequence("empty batch")
        p = self.params
        grads: Params = {k: np.zeros_like(v) for k, v in p.items()}
        total_loss = 0.0
        inv_b = 1.0 / len(seqs)
        for seq, label in zip(seqs, y):
            x = self._encode(seq)
            h_f, cache_f = self._gru_direction(x, "fwd")
            h_b, cache_b = self._gru_direction(x[::-1], "bwd")
            h_cat = np.concatenate([h_f, h_b])
            logits = h_cat @ p["wh"] + p["bh"]
            loss, dlogits = cross_entropy_grad(logits[None, :], np.array([label]))
            dlogits = dlogits[0]
            total_loss += loss
            grads["wh"] += np.outer(h_cat, dlogits)
            grads["bh"] += dlogits
            dh_cat = p["wh"] @ dlogits
            g = self.hidden
            dx_f = self._gru_backward(dh_cat[:g], cache_f, "fwd", grads)
            dx_b = self._gru_backward(dh_cat[g:], cache_b, "bwd", grads)
            dx = dx_f + dx_b[::-1]
            seq64 = np.asarray(seq, dtype=np.float64)
            grads["we"] += seq64.T @ dx
            grads["be"] += dx.sum(axis=0)
        for k in grads:
            grads[k] *= inv_b
        return total_loss * inv_b, grads


def grad_check(model: StaticNet | DynamicNet, sample, eps: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences.

    ``sample`` is (features, class_index): a 49-vector for StaticNet or a
    T x 52 sequence for DynamicNet. Relative error per parameter scalar is
    |g_bp - g_fd| / max(|g_bp|, |g_fd|, 1e-8).
    """
    x, y = sample
    if isinstance(model, StaticNet):
        batch_x = np.asarray(x, dtype=np.float64)[None, :]
        loss_fn = lambda: model.loss_and_grads(batch_x, np.array([y]))
    else:
        loss_fn = lambda: model.loss_and_grads([x], np.array([y]))
    _, grads = loss_fn()

    max_err = 0.0
    for name in sorted(model.params):
        param = model.params[name]
        flat = param.reshape(-1)
        g_flat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            loss_plus, _ = loss_fn()
            flat[i] = orig - eps
            loss_minus, _ = loss_fn()
            flat[i] = orig
            g_fd = (loss_plus - loss_minus) / (2.0 * eps)
            g_bp = g_flat[i]
            denom = max(abs(g_bp), abs(g_fd), 1e-8)
            max_err = max(max_err, abs(g_bp - g_fd) / denom)
    return max_err
