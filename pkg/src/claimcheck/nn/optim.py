"""Adam updates and the triangular cyclical learning-rate policy."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError
from .tensor import Parameter

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def adam_step(param: Parameter, lr: float) -> None:
    """One bias-corrected Adam update, in place.

    The caller owns grad lifetime: grads are read here and zeroed by the
    caller afterwards (the optimizer wrapper below does exactly that).
    """
    param.step_count += 1
    t = param.step_count
    g = param.grad
    param.adam_m *= ADAM_BETA1
    param.adam_m += (1.0 - ADAM_BETA1) * g
    param.adam_v *= ADAM_BETA2
    param.adam_v += (1.0 - ADAM_BETA2) * (g * g)
    m_hat = param.adam_m / (1.0 - ADAM_BETA1 ** t)
    v_hat = param.adam_v / (1.0 - ADAM_BETA2 ** t)
    param.value -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


class Adam:
    """Steps a fixed parameter list and zeroes grads afterwards."""

    def __init__(self, params: list[Parameter]):
        self.params = list(params)

    def step(self, lr: float) -> None:
        for p in self.params:
            adam_step(p, lr)
        for p in self.params:
            p.zero_grad()

    def grad_norms(self) -> dict[str, float]:
        return {p.name: float(np.linalg.norm(p.grad)) for p in self.params}


def cyclical_lr(step: int, max_lr: float, base_lr: float, half_cycle: int) -> float:
    """Triangular schedule: base -> max over half_cycle steps, then back.

    Period is 2 * half_cycle; step 0 sits at base_lr, step half_cycle at
    max_lr.
    """
    if half_cycle < 1:
        raise ConfigurationError(f"half_cycle must be >= 1, got {half_cycle}")
    pos = step % (2 * half_cycle)
    frac = pos / half_cycle if pos <= half_cycle else (2 * half_cycle - pos) / half_cycle
    return base_lr * (1.0 - frac) + max_lr * frac  # exact at both endpoints


def default_base_lr(max_lr: float) -> float:
    return max_lr / 10.0


def steps_per_epoch(n_examples: int, batch_size: int) -> int:
    return max(1, math.ceil(n_examples / batch_size))
