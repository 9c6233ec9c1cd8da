"""Layers with hand-derived exact gradients.

Two styles live here:

* pure ops (``relu``, ``masked_softmax``, ``dropout``) return
  ``(out, cache)`` and have a matching ``*_backward(dout, cache)``;
* stateful layers (``Linear``, ``BatchNorm``, ``LstmEncoder``,
  ``EmbeddingTable``) own :class:`~claimcheck.nn.tensor.Parameter` objects
  and keep a LIFO tape of forward caches, so one instance may be applied
  several times inside a single pass as long as backward calls mirror the
  forward order in reverse. ``reset_tape`` clears leftovers after an
  aborted pass.

Everything is float64 and single-threaded; gradients ACCUMULATE into
``param.grad`` (callers zero grads between steps).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, ShapeMismatchError
from .tensor import Parameter, as_tensor, uniform_init


# ---------------------------------------------------------------------------
# pure ops


def relu(x: np.ndarray):
    """max(0, x); the subgradient at exactly 0 is 0."""
    out = np.maximum(0.0, x)
    return out, (x > 0.0)


def relu_backward(dout: np.ndarray, cache) -> np.ndarray:
    return dout * cache


def masked_softmax(logits: np.ndarray, mask: np.ndarray):
    """Row-wise softmax restricted to ``mask`` positions.

    Masked positions are exactly 0 in the output. Rows whose mask is all
    false return all zeros (the empty-memory convention downstream relies
    on). Max-subtraction runs over valid positions only.
    """
    logits = as_tensor(logits, "softmax logits")
    mask = np.asarray(mask, dtype=bool)
    if logits.shape != mask.shape:
        raise ShapeMismatchError(
            f"masked_softmax: logits {logits.shape} vs mask {mask.shape}"
        )
    neg = np.where(mask, logits, -np.inf)
    row_max = np.max(neg, axis=-1, keepdims=True)
    # all-masked rows: make the shift finite; the mask zeroes them below
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.exp(logits - row_max) * mask
    denom = e.sum(axis=-1, keepdims=True)
    out = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)
    return out, out


def masked_softmax_backward(dout: np.ndarray, cache) -> np.ndarray:
    p = cache
    inner = (dout * p).sum(axis=-1, keepdims=True)
    return p * (dout - inner)  # zero at masked positions since p is zero there


def dropout(x: np.ndarray, rate: float, train: bool, rng: np.random.Generator):
    """Inverted dropout: identity in eval, survivors scaled by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x, None
    keep = rng.random(x.shape) >= rate
    scale = 1.0 / (1.0 - rate)
    return x * keep * scale, (keep, scale)


def dropout_backward(dout: np.ndarray, cache) -> np.ndarray:
    if cache is None:
        return dout
    keep, scale = cache
    return dout * keep * scale


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# stateful layers


class Layer:
    """Shared tape plumbing; subclasses define forward/backward."""

    def __init__(self) -> None:
        self._tape: list = []

    def reset_tape(self) -> None:
        self._tape.clear()

    def _push(self, cache) -> None:
        self._tape.append(cache)

    def _pop(self):
        if not self._tape:
            raise RuntimeError(f"{type(self).__name__}: backward without forward")
        return self._tape.pop()

    def parameters(self) -> dict[str, Parameter]:
        raise NotImplementedError

    def buffers(self) -> dict[str, np.ndarray]:
        return {}


class Linear(Layer):
    """out[i, j] = sum_k x[i, k] W[k, j] + b[j]."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str):
        super().__init__()
        self.name = name
        self.weight = Parameter(uniform_init(rng, in_dim, (in_dim, out_dim)), f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim), f"{name}.bias")

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x, f"{self.name} input")
        if x.ndim != 2 or x.shape[1] != self.weight.shape[0]:
            raise ShapeMismatchError(
                f"{self.name}: input shape {x.shape} does not match "
                f"weight shape {self.weight.shape}"
            )
        self._push(x)
        return x @ self.weight.value + self.bias.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._pop()
        self.weight.grad += x.T @ dout
        self.bias.grad += dout.sum(axis=0)
        return dout @ self.weight.value.T

    def parameters(self) -> dict[str, Parameter]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}


class BatchNorm(Layer):
    """Per-feature batch normalization.

    Train mode normalizes by the biased batch variance (eps 1e-5) and
    updates running stats with momentum 0.1 (running variance stored
    unbiased, which is why a batch of one is rejected). Eval mode
    normalizes by the running stats and is per-example deterministic.
    """

    def __init__(self, dim: int, name: str, eps: float = 1e-5, momentum: float = 0.1):
        super().__init__()
        self.name = name
        self.eps = eps
        self.momentum = momentum
        self.gamma = Parameter(np.ones(dim), f"{name}.gamma")
        self.beta = Parameter(np.zeros(dim), f"{name}.beta")
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        x = as_tensor(x, f"{self.name} input")
        if train:
            b = x.shape[0]
            if b < 2:
                raise ConfigurationError(
                    f"{self.name}: train-mode batch norm needs a batch of >= 2 "
                    f"(got {b}); unbiased running variance is undefined"
                )
            mu = x.mean(axis=0)
            var = x.var(axis=0)  # biased, used for normalization
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mu) * inv_std
            m = self.momentum
            self.running_mean = (1.0 - m) * self.running_mean + m * mu
            self.running_var = (1.0 - m) * self.running_var + m * var * b / (b - 1)
            self._push(("train", xhat, inv_std))
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean) * inv_std
            self._push(("eval", xhat, inv_std))
        return self.gamma.value * xhat + self.beta.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        mode, xhat, inv_std = self._pop()
        self.gamma.grad += (dout * xhat).sum(axis=0)
        self.beta.grad += dout.sum(axis=0)
        dxhat = dout * self.gamma.value
        if mode == "train":
            b = dout.shape[0]
            return (inv_std / b) * (
                b * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
        # eval: running stats are constants, so the map is affine per feature
        return dxhat * inv_std

    def parameters(self) -> dict[str, Parameter]:
        return {f"{self.name}.gamma": self.gamma, f"{self.name}.beta": self.beta}

    def buffers(self) -> dict[str, np.ndarray]:
        return {
            f"{self.name}.running_mean": self.running_mean,
            f"{self.name}.running_var": self.running_var,
        }

    def load_buffers(self, named: dict[str, np.ndarray]) -> None:
        self.running_mean = np.array(named[f"{self.name}.running_mean"], dtype=np.float64)
        self.running_var = np.array(named[f"{self.name}.running_var"], dtype=np.float64)


class EmbeddingTable(Layer):
    """Index lookup into a trainable (V x dim) table with scatter-add grads."""

    def __init__(self, n_rows: int, dim: int, rng: np.random.Generator, name: str):
        super().__init__()
        self.name = name
        self.table = Parameter(rng.uniform(-0.05, 0.05, size=(n_rows, dim)), f"{name}.table")

    def forward(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.table.shape[0]):
            raise ShapeMismatchError(
                f"{self.name}: index out of range 0..{self.table.shape[0] - 1}"
            )
        self._push(idx)
        return self.table.value[idx]

    def backward(self, dout: np.ndarray) -> None:
        idx = self._pop()
        np.add.at(self.table.grad, idx.reshape(-1), dout.reshape(-1, self.table.shape[1]))

    def parameters(self) -> dict[str, Parameter]:
        return {f"{self.name}.table": self.table}


class LstmEncoder(Layer):
    """Single-layer unidirectional LSTM that encodes one token sequence.

    Standard gates (input, forget, cell candidate, output; sigmoid /
    sigmoid / tanh / sigmoid, packed in that column order). The encoding
    of a T x e sequence is concat(h_T, mean_t h_t), dimension 2h. Exact
    backpropagation through time.
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, name: str):
        super().__init__()
        self.name = name
        self.in_dim = in_dim
        self.hidden = hidden
        self.w_ih = Parameter(uniform_init(rng, in_dim, (in_dim, 4 * hidden)), f"{name}.w_ih")
        self.w_hh = Parameter(uniform_init(rng, hidden, (hidden, 4 * hidden)), f"{name}.w_hh")
        self.bias = Parameter(np.zeros(4 * hidden), f"{name}.bias")

    @property
    def out_dim(self) -> int:
        return 2 * self.hidden

    def forward(self, tokens: np.ndarray) -> np.ndarray:
        tokens = as_tensor(tokens, f"{self.name} tokens")
        if tokens.ndim != 2 or tokens.shape[1] != self.in_dim:
            raise ShapeMismatchError(
                f"{self.name}: tokens shape {tokens.shape}, expected (T, {self.in_dim})"
            )
        T = tokens.shape[0]
        if T == 0:
            raise ShapeMismatchError(f"{self.name}: empty token sequence")
        h = self.hidden
        h_t = np.zeros(h)
        c_t = np.zeros(h)
        steps = []
        hs = np.empty((T, h))
        for t in range(T):
            z = tokens[t] @ self.w_ih.value + h_t @ self.w_hh.value + self.bias.value
            i = _sig(z[:h])
            f = _sig(z[h:2 * h])
            g = np.tanh(z[2 * h:3 * h])
            o = _sig(z[3 * h:])
            c_prev = c_t
            c_t = f * c_prev + i * g
            tc = np.tanh(c_t)
            h_prev = h_t
            h_t = o * tc
            steps.append((tokens[t], h_prev, c_prev, i, f, g, o, tc))
            hs[t] = h_t
        self._push((steps, T))
        return np.concatenate([hs[-1], hs.mean(axis=0)])

    def backward(self, dout: np.ndarray) -> np.ndarray:
        steps, T = self._pop()
        h = self.hidden
        d_last = dout[:h]
        d_mean = dout[h:] / T
        dh_next = np.zeros(h)
        dc_next = np.zeros(h)
        dtokens = np.empty((T, self.in_dim))
        for t in range(T - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, g, o, tc = steps[t]
            dh = dh_next + d_mean + (d_last if t == T - 1 else 0.0)
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ])
            self.w_ih.grad += np.outer(x_t, dz)
            self.w_hh.grad += np.outer(h_prev, dz)
            self.bias.grad += dz
            dtokens[t] = dz @ self.w_ih.value.T
            dh_next = dz @ self.w_hh.value.T
        return dtokens

    def parameters(self) -> dict[str, Parameter]:
        return {
            f"{self.name}.w_ih": self.w_ih,
            f"{self.name}.w_hh": self.w_hh,
            f"{self.name}.bias": self.bias,
        }


def _sig(x: np.ndarray) -> np.ndarray:
    return sigmoid(x)
