"""Shared continuous upsampler: one weight set serves every width and scale.

Each high-resolution pixel is reconstructed from the nearest low-resolution
feature vector, its sub-pixel offset to that feature (in LR-pixel units),
and the output cell size (2/H', 2/W' in normalized coordinates), through a
two-layer MLP. A bilinear upsample of the input image is added as a skip, so
zero MLP weights reproduce plain bilinear interpolation exactly.

All coordinates use pixel centers at (i + 0.5)/n (align-corners-false), with
edge clamping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import Tensor, add, concat, gather_rows, linear, relu, reshape, transpose
from .scales import ScalePair


@dataclass(frozen=True)
class UpsamplerWeights:
    """MLP weights: mlp1 (hidden, C_in+4), mlp2 (3, hidden), biases."""

    mlp1: Tensor
    b1: Tensor
    mlp2: Tensor
    b2: Tensor

    @property
    def hidden(self) -> int:
        return self.mlp1.data.shape[0]


def target_size(h: int, w: int, s: ScalePair) -> tuple:
    """Output dimensions round(H*s_h), round(W*s_w) with half-up rounding."""
    return int(np.floor(h * s.s_h + 0.5)), int(np.floor(w * s.s_w + 0.5))


def _axis_nearest(n_in: int, n_out: int):
    # continuous source coordinate of each output pixel center, LR-pixel units
    u = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    idx = np.clip(np.rint(u).astype(np.intp), 0, n_in - 1)
    return idx, u - idx


def _axis_linear(n_in: int, n_out: int):
    u = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    j0 = np.floor(u).astype(np.intp)
    frac = u - j0
    lo = np.clip(j0, 0, n_in - 1)
    hi = np.clip(j0 + 1, 0, n_in - 1)
    return lo, hi, frac


def bilinear_upsample(image: Tensor, s: ScalePair) -> Tensor:
    """Plain bilinear resize of a (3, H, W) image; not gradient-tracked."""
    if image.data.ndim != 3:
        raise ShapeError(f"expected (C, H, W) image, got {image.shape}")
    _, h, w = image.data.shape
    out_h, out_w = target_size(h, w, s)
    d = image.data
    y0, y1, fy = _axis_linear(h, out_h)
    x0, x1, fx = _axis_linear(w, out_w)
    fy = fy.astype(d.dtype)[None, :, None]
    fx = fx.astype(d.dtype)[None, None, :]
    rows = d[:, y0, :] * (1.0 - fy) + d[:, y1, :] * fy
    out = rows[:, :, x0] * (1.0 - fx) + rows[:, :, x1] * fx
    return Tensor(out)


def upsample(feat: Tensor, image: Tensor, s: ScalePair, weights: UpsamplerWeights) -> Tensor:
    """Reconstruct a (3, H', W') image from features and the LR input."""
    if feat.data.ndim != 3 or image.data.ndim != 3 or image.data.shape[0] != 3:
        raise ShapeError(f"bad input shapes: feat {feat.shape}, image {image.shape}")
    c, h, w = feat.data.shape
    if image.data.shape[1:] != (h, w):
        raise ShapeError(f"feature {feat.shape} vs image {image.shape} spatial mismatch")
    if weights.mlp1.data.shape[1] != c + 4:
        raise ShapeError(
            f"mlp1 expects {weights.mlp1.data.shape[1]} inputs, feature gives {c + 4}"
        )
    out_h, out_w = target_size(h, w, s)
    iy, off_y = _axis_nearest(h, out_h)
    ix, off_x = _axis_nearest(w, out_w)

    # per-pixel MLP input: nearest feature, offset to it, output cell size
    flat = transpose(reshape(feat, (c, h * w)), (1, 0))
    pix = (iy[:, None] * w + ix[None, :]).reshape(-1)
    gathered = gather_rows(flat, pix)

    dtype = feat.data.dtype
    extra = np.empty((out_h * out_w, 4), dtype=dtype)
    extra[:, 0] = np.repeat(off_y, out_w)
    extra[:, 1] = np.tile(off_x, out_h)
    extra[:, 2] = 2.0 / out_h
    extra[:, 3] = 2.0 / out_w
    x = concat([gathered, Tensor(extra)], axis=1)

    hidden = relu(linear(x, weights.mlp1, weights.b1))
    rgb = linear(hidden, weights.mlp2, weights.b2)
    img = transpose(reshape(rgb, (out_h, out_w, 3)), (2, 0, 1))
    return add(img, bilinear_upsample(image, s))
