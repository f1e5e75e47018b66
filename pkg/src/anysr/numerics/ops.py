"""Differentiable operations over :class:`~anysr.numerics.tensor.Tensor`.

Every op returns a fresh tensor and, when gradient tracking is active,
registers a vector-Jacobian product with the output. Shapes are validated
eagerly so failures point at the offending op, not a later GEMM.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, ShapeError
from .tensor import Tensor, as_tensor, make_op


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return make_op(out, (a, b), vjp, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return make_op(out, (a, b), vjp, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return make_op(out, (a, b), vjp, "mul")


def scale(x: Tensor, c: float) -> Tensor:
    cval = x.data.dtype.type(c)
    out = x.data * cval

    def vjp(g):
        return (g * cval,)

    return make_op(out, (x,), vjp, "scale")


# ---------------------------------------------------------------------------
# activations


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0)

    def vjp(g):
        # Subgradient at exactly 0 is 0, so the mask is strict.
        return (g * (x.data > 0),)

    return make_op(out, (x,), vjp, "relu")


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    out[~pos] = ex / (1.0 + ex)

    def vjp(g):
        return (g * out * (1.0 - out),)

    return make_op(out, (x,), vjp, "sigmoid")


def activation(kind: str, x: Tensor) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ConfigError(f"unknown activation kind {kind!r}")


# ---------------------------------------------------------------------------
# linear algebra


def matvec(weight: Tensor, x: Tensor) -> Tensor:
    if weight.data.ndim != 2 or x.data.ndim != 1:
        raise ShapeError(f"matvec expects (m,n)@(n,), got {weight.shape} @ {x.shape}")
    if weight.data.shape[1] != x.data.shape[0]:
        raise ShapeError(f"matvec inner dims differ: {weight.shape} vs {x.shape}")
    out = weight.data @ x.data

    def vjp(g):
        return np.outer(g, x.data), weight.data.T @ g

    return make_op(out, (weight, x), vjp, "matvec")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return make_op(out, (a, b), vjp, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Row-wise affine map: x[P,n] @ weight[m,n]^T (+ bias[m])."""
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.data.shape[1] != weight.data.shape[1]:
        raise ShapeError(f"linear shape mismatch: {x.shape} vs weight {weight.shape}")
    out = x.data @ weight.data.T
    if bias is not None:
        if bias.data.shape != (weight.data.shape[0],):
            raise ShapeError(f"linear bias shape {bias.shape} vs weight {weight.shape}")
        out = out + bias.data

    if bias is None:

        def vjp(g):
            return g @ weight.data, g.T @ x.data

        return make_op(out, (x, weight), vjp, "linear")

    def vjp_b(g):
        return g @ weight.data, g.T @ x.data, g.sum(axis=0)

    return make_op(out, (x, weight, bias), vjp_b, "linear")


# ---------------------------------------------------------------------------
# convolution

_CONV_DOC_NOTE = """
im2col layout: the reduction axis of the GEMM is flattened as
(input channel, kernel row, kernel col), i.e. the kernel window is
row-major within each input channel and channels are concatenated.
This order is fixed so repeated runs reduce in the same sequence.
"""


def _im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    # x: (C, H, W) -> (H*W, C*k*k) with stride-1 windows over the padded map.
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    return win.transpose(1, 2, 0, 3, 4).reshape(h * w, c * k * k)


def _corr(x: np.ndarray, kernel: np.ndarray, pad: int) -> np.ndarray:
    c_out, c_in, k, _ = kernel.shape
    _, h, w = x.shape
    cols = _im2col(x, k, pad)
    out = kernel.reshape(c_out, c_in * k * k) @ cols.T
    return out.reshape(c_out, h, w)


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor, padding: int) -> Tensor:
    """Stride-1 2D convolution (cross-correlation) preserving spatial size.

    ``x`` is (C_in, H, W), ``kernel`` (C_out, C_in, k, k), ``bias`` (C_out,).
    ``padding`` must equal (k-1)/2 with odd k, so output is (C_out, H, W).
    """
    if x.data.ndim != 3 or kernel.data.ndim != 4:
        raise ShapeError(f"conv2d expects CHW input and OIHW kernel, got {x.shape}, {kernel.shape}")
    c_out, c_in, k, k2 = kernel.data.shape
    if k != k2:
        raise ShapeError(f"non-square kernel {kernel.shape}")
    if k % 2 == 0:
        raise ConfigError(f"conv2d kernel size must be odd, got {k}")
    if padding != (k - 1) // 2:
        raise ConfigError(f"conv2d padding must be (k-1)/2 = {(k - 1) // 2}, got {padding}")
    if x.data.shape[0] != c_in:
        raise ShapeError(f"conv2d channel mismatch: input {x.shape} vs kernel {kernel.shape}")
    if bias.data.shape != (c_out,):
        raise ShapeError(f"conv2d bias shape {bias.shape}, expected ({c_out},)")

    _, h, w = x.data.shape
    cols = _im2col(x.data, k, padding)
    wmat = kernel.data.reshape(c_out, c_in * k * k)
    out = wmat @ cols.T
    out += bias.data[:, None]
    out = out.reshape(c_out, h, w)

    def vjp(g):
        gmat = g.reshape(c_out, h * w)
        d_kernel = (gmat @ cols).reshape(kernel.data.shape)
        d_bias = g.sum(axis=(1, 2))
        # dX is the correlation of g with the spatially flipped kernel,
        # input/output channels swapped; same padding because p=(k-1)/2.
        flipped = np.ascontiguousarray(kernel.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        d_x = _corr(g, flipped, padding)
        return d_x, d_kernel, d_bias

    return make_op(out, (x, kernel, bias), vjp, "conv2d")


# ---------------------------------------------------------------------------
# reductions and losses


def global_avg_pool(f: Tensor) -> Tensor:
    if f.data.ndim != 3:
        raise ShapeError(f"global_avg_pool expects (C,H,W), got {f.shape}")
    c, h, w = f.data.shape
    if h < 1 or w < 1:
        raise ShapeError("global_avg_pool on empty spatial dims")
    out = f.data.mean(axis=(1, 2))

    def vjp(g):
        return (np.broadcast_to(g[:, None, None] / (h * w), f.data.shape).copy(),)

    return make_op(out, (f,), vjp, "global_avg_pool")


def l1_loss(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"l1_loss shape mismatch: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    out = np.abs(diff).mean(dtype=a.data.dtype)

    def vjp(g):
        s = np.sign(diff) * (g / diff.size)
        return s, -s

    return make_op(np.asarray(out, dtype=a.data.dtype), (a, b), vjp, "l1_loss")


def sum_all(x: Tensor) -> Tensor:
    out = np.asarray(x.data.sum(), dtype=x.data.dtype)

    def vjp(g):
        return (np.broadcast_to(g, x.data.shape).astype(x.data.dtype, copy=True),)

    return make_op(out, (x,), vjp, "sum_all")


def mean_all(x: Tensor) -> Tensor:
    return scale(sum_all(x), 1.0 / x.data.size)


def mean_of(losses: Sequence[Tensor]) -> Tensor:
    if not losses:
        raise ShapeError("mean_of on empty sequence")
    acc = losses[0]
    for term in losses[1:]:
        acc = add(acc, term)
    return scale(acc, 1.0 / len(losses))


# ---------------------------------------------------------------------------
# shape manipulation


def reshape(x: Tensor, shape: tuple) -> Tensor:
    out = x.data.reshape(shape)

    def vjp(g):
        return (g.reshape(x.data.shape),)

    return make_op(out, (x,), vjp, "reshape")


def transpose(x: Tensor, axes: tuple) -> Tensor:
    out = x.data.transpose(axes)
    inverse = tuple(np.argsort(axes))

    def vjp(g):
        return (g.transpose(inverse),)

    return make_op(out, (x,), vjp, "transpose")


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    bounds = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_op(out, tuple(parts), vjp, "concat")


def take_slice(x: Tensor, key: tuple) -> Tensor:
    """Slice ``x`` by a tuple of slices, materialized contiguously.

    The contiguous copy makes a sliced weight byte-equal to the same region
    copied out of the full tensor, which keeps sliced and standalone
    execution paths bit-identical. Backward embeds the gradient into a zero
    buffer of the parent's shape.
    """
    sub_view = x.data[key]
    out = np.ascontiguousarray(sub_view)

    def vjp(g):
        z = np.zeros_like(x.data)
        z[key] = g
        return (z,)

    return make_op(out, (x,), vjp, "take_slice")


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows of a 2D tensor by integer index (duplicates allowed)."""
    if x.data.ndim != 2:
        raise ShapeError(f"gather_rows expects 2D input, got {x.shape}")
    idx = np.asarray(idx, dtype=np.intp)
    out = x.data[idx]

    def vjp(g):
        z = np.zeros_like(x.data)
        np.add.at(z, idx, g)
        return (z,)

    return make_op(out, (x,), vjp, "gather_rows")
