"""Adam optimizer with optional per-tensor active-region masking.

The masked form exists for elastic training: parameters outside a view's
active slices must stay bit-identical across a step, including their moment
buffers, so masked regions are skipped entirely rather than decayed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..errors import NumericError, ShapeError

SliceKey = Tuple[slice, ...]


@dataclass
class AdamState:
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam_state(
    params: Mapping[str, np.ndarray],
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    state = AdamState(beta1=beta1, beta2=beta2, epsilon=epsilon)
    for name, value in params.items():
        state.first_moment[name] = np.zeros_like(value)
        state.second_moment[name] = np.zeros_like(value)
    return state


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, Optional[np.ndarray]],
    state: AdamState,
    lr: float,
    active: Optional[Mapping[str, SliceKey]] = None,
) -> AdamState:
    """One Adam update in place on ``params``.

    ``grads`` entries that are ``None`` are skipped (the parameter was not
    part of the step's graph). When ``active`` provides a slice key for a
    name, only that region of the parameter and its moments is touched.
    step_count is global: bias correction uses the shared step index.
    """
    if lr < 0:
        raise ShapeError(f"negative learning rate {lr}")
    state.step_count += 1
    t = state.step_count
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.shape:
            raise ShapeError(f"grad shape {g.shape} vs param shape {p.shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name!r}")
        region = active.get(name) if active is not None else None
        if region is None:
            region = ()
        m = state.first_moment[name]
        v = state.second_moment[name]
        gr = g[region]
        m[region] = b1 * m[region] + (1.0 - b1) * gr
        v[region] = b2 * v[region] + (1.0 - b2) * gr * gr
        m_hat = m[region] / corr1
        v_hat = v[region] / corr2
        p[region] -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype, copy=False)
    return state
