"""Finite-difference gradient oracle (central differences)."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import NumericError
from .tensor import Tensor


def _point_array(point) -> np.ndarray:
    if isinstance(point, Tensor):
        return point.data
    return np.asarray(point, dtype=np.float64)


def finite_diff_grad(
    fn: Callable[[np.ndarray], float],
    point,
    h: float = 1e-5,
    indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Central-difference gradient of ``fn`` at ``point``.

    ``fn`` receives a dense array of ``point``'s shape and returns a float.
    When ``indices`` (flat indices) is given, only those entries are probed
    and the rest of the returned array stays zero; that keeps full-pipeline
    checks affordable.
    """
    if h <= 0:
        raise NumericError(f"finite difference step must be positive, got {h}")
    base = _point_array(point).astype(np.float64, copy=True)
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    g_flat = grad.reshape(-1)
    probe = range(flat.size) if indices is None else indices
    for i in probe:
        saved = flat[i]
        flat[i] = saved + h
        f_plus = float(fn(base))
        flat[i] = saved - h
        f_minus = float(fn(base))
        flat[i] = saved
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"non-finite objective at probe index {i}")
        g_flat[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    """|a-n| scaled by the larger magnitude, floored to avoid 0/0 blowups."""
    denom = max(abs(analytic), abs(numeric), floor)
    return abs(analytic - numeric) / denom
