"""Bicubic resampling (Keys kernel, a = -0.5), the degradation operator.

Separable 4-tap filtering with pixel centers at (i + 0.5)/n, edge clamping,
and per-output-pixel weight normalization. No antialiasing prefilter: the
same operator generates LR training data and serves as the classical
baseline, so the two are always consistent.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

_A = -0.5


def bicubic_kernel(x):
    """Keys cubic with a = -0.5; supported on |x| < 2."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    inner = (_A + 2.0) * x ** 3 - (_A + 3.0) * x ** 2 + 1.0
    outer = _A * x ** 3 - 5.0 * _A * x ** 2 + 8.0 * _A * x - 4.0 * _A
    return np.where(x <= 1.0, inner, np.where(x < 2.0, outer, 0.0))


def _axis_taps(n_in: int, n_out: int):
    u = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(u).astype(np.intp)
    taps = base[:, None] + np.arange(-1, 3)
    weights = bicubic_kernel(u[:, None] - taps)
    weights /= weights.sum(axis=1, keepdims=True)
    return np.clip(taps, 0, n_in - 1), weights


def bicubic_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (3, H, W) [0,1] data to (3, out_h, out_w), clipped to [0,1]."""
    if img.ndim != 3:
        raise ShapeError(f"expected (C, H, W) image, got shape {img.shape}")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"output dims must be positive, got {out_h}x{out_w}")
    data = np.asarray(img, dtype=np.float64)
    _, h, w = data.shape
    taps_y, w_y = _axis_taps(h, out_h)
    taps_x, w_x = _axis_taps(w, out_w)
    rows = np.einsum("cnkw,nk->cnw", data[:, taps_y, :], w_y)
    out = np.einsum("cnmk,mk->cnm", rows[:, :, taps_x], w_x)
    return np.clip(out, 0.0, 1.0)
