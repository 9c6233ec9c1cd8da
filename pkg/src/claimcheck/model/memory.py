"""One attention memory: banks, dot-product attention, weighted readout.

Evidence items are embedded twice through linear + ReLU banks: an input
representation scored against the query, and an output representation
averaged under the attention weights:

    m_a_j = ReLU(W_a x_j + b_a),  m_c_j = ReLU(W_c x_j + b_c)
    p     = masked_softmax(query_hat . m_a_j over items j)
    o     = sum_j p_j m_c_j + query_hat

Padded items are masked out of the softmax exactly, so an example whose
mask row is all zeros reads out o = query_hat untouched.

``memory_embed`` / ``attend`` / ``memory_output`` are exposed separately
so small memories can be checked against a brute-force composition of the
formulas; :class:`AttentionMemory` fuses them with the caching needed for
the hand-written backward pass.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..nn.layers import (
    Linear,
    dropout,
    dropout_backward,
    masked_softmax,
    masked_softmax_backward,
    relu,
    relu_backward,
)
from ..nn.tensor import Parameter


def attend(query_hat: np.ndarray, m_a: np.ndarray, mask: np.ndarray):
    """p[b, j] = softmax_j(query_hat[b] . m_a[b, j]) over valid items."""
    logits = np.einsum("bd,bjd->bj", query_hat, m_a)
    p, cache = masked_softmax(logits, mask)
    return p, cache


def memory_output(p: np.ndarray, m_c: np.ndarray, query_hat: np.ndarray) -> np.ndarray:
    """o[b] = sum_j p[b, j] m_c[b, j] + query_hat[b]."""
    return np.einsum("bj,bjd->bd", p, m_c) + query_hat


class AttentionMemory:
    def __init__(self, name: str, input_dim: int, mem_dim: int, rng: np.random.Generator):
        self.name = name
        self.input_dim = input_dim
        self.mem_dim = mem_dim
        self.input_bank = Linear(input_dim, mem_dim, rng, f"{name}.input_bank")
        self.output_bank = Linear(input_dim, mem_dim, rng, f"{name}.output_bank")

    def memory_embed(self, items: np.ndarray):
        """(b, J, input_dim) -> input/output representations (b, J, mem_dim)."""
        b, j, d = items.shape
        if d != self.input_dim:
            raise ConfigurationError(
                f"memory {self.name!r}: item width {d} != configured {self.input_dim}"
            )
        flat = items.reshape(b * j, d)
        m_a, cache_a = relu(self.input_bank.forward(flat))
        m_c, cache_c = relu(self.output_bank.forward(flat))
        cache = (cache_a, cache_c, (b, j, d))
        return (
            m_a.reshape(b, j, self.mem_dim),
            m_c.reshape(b, j, self.mem_dim),
            cache,
        )

    def forward(
        self,
        items: np.ndarray,
        query_hat: np.ndarray,
        mask: np.ndarray,
        train: bool = False,
        rng: np.random.Generator | None = None,
        memory_dropout: float = 0.0,
    ):
        m_a, m_c, embed_cache = self.memory_embed(items)
        m_a, drop_a = dropout(m_a, memory_dropout, train, rng)
        m_c, drop_c = dropout(m_c, memory_dropout, train, rng)
        p, softmax_cache = attend(query_hat, m_a, mask)
        o = memory_output(p, m_c, query_hat)
        ctx = (m_a, m_c, p, query_hat, softmax_cache, drop_a, drop_c, embed_cache)
        return o, p, ctx

    def backward(self, do: np.ndarray, ctx) -> tuple[np.ndarray, np.ndarray]:
        """Returns (d_items, d_query_hat); bank gradients accumulate."""
        m_a, m_c, p, query_hat, softmax_cache, drop_a, drop_c, embed_cache = ctx
        cache_a, cache_c, (b, j, d) = embed_cache

        dq = do.copy()
        dp = np.einsum("bd,bjd->bj", do, m_c)
        dm_c = p[:, :, None] * do[:, None, :]

        dlogits = masked_softmax_backward(dp, softmax_cache)
        dq += np.einsum("bj,bjd->bd", dlogits, m_a)
        dm_a = dlogits[:, :, None] * query_hat[:, None, :]

        dm_a = dropout_backward(dm_a, drop_a)
        dm_c = dropout_backward(dm_c, drop_c)

        flat_a = relu_backward(dm_a.reshape(b * j, -1), cache_a)
        flat_c = relu_backward(dm_c.reshape(b * j, -1), cache_c)
        d_items = self.input_bank.backward(flat_a) + self.output_bank.backward(flat_c)
        return d_items.reshape(b, j, d), dq

    def reset_tape(self) -> None:
        self.input_bank.reset_tape()
        self.output_bank.reset_tape()

    def parameters(self) -> dict[str, Parameter]:
        out = {}
        out.update(self.input_bank.parameters())
        out.update(self.output_bank.parameters())
        return out
