"""Dense float64 tensors, trainable parameters, and seeded randomness.

Tensors are plain C-contiguous numpy float64 arrays. ``as_tensor`` is the
boundary guard: every layer passes its inputs through it so NaN/Inf never
propagate silently. ``Parameter`` bundles a value with its gradient
accumulator and per-parameter Adam state.

Randomness: ``make_rng(seed)`` returns a ``numpy.random.Generator`` seeded
with PCG64. The same seed plus the same call sequence reproduces the same
draws, which is the only determinism contract training relies on; child
streams for independent purposes (init, shuffling, dropout) come from
``spawn_rngs``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteError, ShapeMismatchError


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Coerce to a C-contiguous float64 array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


def check_shape(arr: np.ndarray, expected: tuple, name: str) -> None:
    if tuple(arr.shape) != tuple(expected):
        raise ShapeMismatchError(
            f"{name}: expected shape {tuple(expected)}, got {tuple(arr.shape)}"
        )


class Parameter:
    """A trainable tensor with gradient and Adam moment buffers.

    ``grad``, ``adam_m`` and ``adam_v`` always share the value's shape.
    ``step_count`` only ever increases (one per optimizer step).
    """

    __slots__ = ("name", "value", "grad", "adam_m", "adam_v", "step_count")

    def __init__(self, value, name: str = "param"):
        self.name = name
        self.value = as_tensor(value, name)
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)
        self.step_count = 0

    @property
    def shape(self) -> tuple:
        return tuple(self.value.shape)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Parameter({self.name}, shape={self.shape}, steps={self.step_count})"


def uniform_init(rng: np.random.Generator, fan_in: int, shape: tuple) -> np.ndarray:
    """uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)); keeps pre-activations O(1)."""
    bound = 1.0 / math.sqrt(max(1, fan_in))
    return rng.uniform(-bound, bound, size=shape)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent deterministic child generators of one root seed."""
    seqs = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in seqs]
