"""Central-finite-difference verification of analytic gradients.

``gradcheck(fn, params)`` treats ``fn`` as a deterministic scalar function
of the parameter values (dropout off, batch norm either eval or a fixed
train batch). One call to ``fn`` must run forward AND populate
``param.grad`` for every parameter passed in; subsequent perturbed calls
only use the returned loss value.

Large parameters can be spot-checked on a deterministic random coordinate
subset (``max_coords_per_param``); small ones are checked exhaustively.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from ..errors import NonFiniteError
from .tensor import Parameter, make_rng


def gradcheck(
    fn: Callable[[], float],
    params: Iterable[Parameter],
    h: float = 1e-5,
    max_coords_per_param: int | None = None,
    seed: int = 0,
) -> float:
    """Return the max relative error |a - n| / max(1, |a|, |n|) over coordinates."""
    params = list(params)
    for p in params:
        p.zero_grad()
    base = float(fn())
    if not math.isfinite(base):
        raise NonFiniteError("gradcheck: loss is not finite at the base point")
    analytic = {}
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NonFiniteError(f"gradcheck: analytic gradient of {p.name} is not finite")
        analytic[p.name] = p.grad.copy()

    rng = make_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        else:
            coords = range(n)
        a_flat = analytic[p.name].reshape(-1)
        for k in coords:
            orig = flat[k]
            flat[k] = orig + h
            f_plus = float(fn())
            flat[k] = orig - h
            f_minus = float(fn())
            flat[k] = orig
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise NonFiniteError(
                    f"gradcheck: non-finite loss while perturbing {p.name}[{k}]"
                )
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = a_flat[k]
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if err > worst:
                worst = err
    return worst
