"""Binary cross-entropy on probabilities."""

from __future__ import annotations

import numpy as np

CLAMP = 1e-7  # keeps log() finite; probabilities are pinned to [CLAMP, 1-CLAMP]


def bce_loss(p: np.ndarray, y: np.ndarray):
    """Elementwise -y log p - (1-y) log(1-p) with clamped p.

    Returns (loss, dloss_dp) where the gradient (p - y) / (p (1 - p)) is
    evaluated at the clamped probability and passed straight through.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    pc = np.clip(p, CLAMP, 1.0 - CLAMP)
    loss = -y * np.log(pc) - (1.0 - y) * np.log(1.0 - pc)
    grad = (pc - y) / (pc * (1.0 - pc))
    return loss, grad


def mean_bce(p: np.ndarray, y: np.ndarray):
    """Batch-mean BCE; gradient already divided by the batch size."""
    loss, grad = bce_loss(p, y)
    n = max(1, loss.size)
    return float(loss.mean()), grad / n
