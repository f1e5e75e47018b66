"""Scale-conditioned channel gating with feature-interweaving.

The pooled block feature f-tilde (length m = floor(C_in * w)) is combined
with the scale pair (s_h, s_w) and pushed through a two-layer MLP whose
weights are sliced to the active width:

    hidden = ReLU(W1[:, :prefix] @ f_bar)        prefix = m + 2*floor(lam*w)
    gate   = Sigmoid(W2[:m, :] @ hidden)
    out[c] = f[c] * gate[c]

In interweave mode the scale pair is inserted floor(lam*w) times at the
positions floor(C_in*i/lam) + 2i - 1 (1-indexed, i = 1..floor(lam*w)), which
depend only on (C_in, lam, i): every width reads scale values from the same
W1 columns. The naive mode appends the pair at the rear instead (prefix =
m + 2), which moves the scale columns whenever the width changes; it exists
as an ablation arm.

Positions are stored 0-indexed half-open; the 1-indexed formula values are
recoverable as (a + 1, b + 1) for an insertion (a, b).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import ConfigError, ShapeError
from .numerics import (
    Tensor,
    add,
    concat,
    global_avg_pool,
    matvec,
    mul,
    relu,
    reshape,
    sigmoid,
    take_slice,
)
from .scales import ScalePair

# floor() guard: widths arrive as decimal literals stored in binary floating
# point, so products like 16 * 0.7 can land a hair under the exact value.
_FLOOR_EPS = 1e-9

ASE_MODES = ("interweave", "naive", "off")


def floor_scaled(count: int, fraction: float) -> int:
    return int(count * fraction + _FLOOR_EPS)


@dataclass(frozen=True)
class AseWeights:
    """Two-layer gating MLP; biases optional (disabled by default)."""

    w1: Tensor
    w2: Tensor
    b1: Optional[Tensor] = None
    b2: Optional[Tensor] = None


@dataclass(frozen=True)
class InterleavePlan:
    c_in: int
    lam: int
    w: float
    m: int
    insertions: Tuple[Tuple[int, int], ...]
    total_len: int
    feature_segments: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...]


def plan_interleave(c_in: int, lam: int, w: float) -> InterleavePlan:
    """Slot layout for width ``w``: where scale pairs and feature runs live.

    ``feature_segments`` maps source ranges of the pooled vector to
    destination ranges of the concatenated vector; segments and insertions
    tile [0, total_len) exactly.
    """
    if lam < 1 or c_in // lam < 1:
        raise ConfigError(f"need floor(c_in/lam) >= 1, got c_in={c_in}, lam={lam}")
    if not 0.0 < w <= 1.0:
        raise ConfigError(f"width must lie in (0, 1], got {w}")
    m = floor_scaled(c_in, w)
    count = floor_scaled(lam, w)
    # source boundary before pair i (1-indexed formula: floor(c_in*i/lam))
    cuts = [0] + [(c_in * i) // lam for i in range(1, count + 1)]
    insertions: List[Tuple[int, int]] = []
    segments: List[Tuple[Tuple[int, int], Tuple[int, int]]] = []
    for i in range(1, count + 1):
        first = cuts[i] + 2 * (i - 1)  # == (floor(c_in*i/lam) + 2i - 1) - 1
        insertions.append((first, first + 1))
        segments.append(((cuts[i - 1], cuts[i]), (cuts[i - 1] + 2 * (i - 1), first)))
    segments.append(((cuts[count], m), (cuts[count] + 2 * count, m + 2 * count)))
    return InterleavePlan(
        c_in=c_in,
        lam=lam,
        w=w,
        m=m,
        insertions=tuple(insertions),
        total_len=m + 2 * count,
        feature_segments=tuple(segments),
    )


def interweave(f_pooled: Tensor, s: ScalePair, plan: InterleavePlan) -> Tensor:
    if f_pooled.data.shape != (plan.m,):
        raise ShapeError(f"pooled feature has shape {f_pooled.shape}, plan expects ({plan.m},)")
    pair = Tensor([s.s_h, s.s_w], dtype=f_pooled.dtype)
    parts = []
    for idx, (src, _dst) in enumerate(plan.feature_segments):
        parts.append(take_slice(f_pooled, (slice(src[0], src[1]),)))
        if idx < len(plan.insertions):
            parts.append(pair)
    return concat(parts, axis=0)


def naive_concat(f_pooled: Tensor, s: ScalePair) -> Tensor:
    pair = Tensor([s.s_h, s.s_w], dtype=f_pooled.dtype)
    return concat([f_pooled, pair], axis=0)


def active_prefix_len(mode: str, w: float, c_in: int, lam: int) -> int:
    """Number of leading W1 columns a width-w subnet reads."""
    if mode == "interweave":
        return floor_scaled(c_in, w) + 2 * floor_scaled(lam, w)
    if mode == "naive":
        return floor_scaled(c_in, w) + 2
    raise ConfigError(f"unknown ase mode {mode!r}")


def ase_apply(
    f_t: Tensor,
    s: ScalePair,
    w1_active: Tensor,
    w2_active: Tensor,
    b1: Optional[Tensor],
    b2_active: Optional[Tensor],
    mode: str,
    w: float,
    c_in: int,
    lam: int,
) -> Tensor:
    """Gating core over already-sliced weights.

    ``w1_active`` is (2*C_in, prefix), ``w2_active`` (m, 2*C_in),
    ``b2_active`` (m,). Both the width-sliced view and a standalone dense
    extraction call this with byte-equal operands, which keeps the two
    execution paths bit-identical.
    """
    if f_t.data.ndim != 3:
        raise ShapeError(f"expected (m, H, W) feature, got {f_t.shape}")
    m = f_t.data.shape[0]
    if m != floor_scaled(c_in, w):
        raise ShapeError(f"feature has {m} channels, width {w} of {c_in} implies {floor_scaled(c_in, w)}")
    prefix = active_prefix_len(mode, w, c_in, lam)
    if w1_active.data.shape != (2 * c_in, prefix):
        raise ShapeError(f"active w1 shape {w1_active.shape}, expected (2*{c_in}, {prefix})")
    if w2_active.data.shape != (m, 2 * c_in):
        raise ShapeError(f"active w2 shape {w2_active.shape}, expected ({m}, 2*{c_in})")

    pooled = global_avg_pool(f_t)
    if mode == "interweave":
        f_bar = interweave(pooled, s, plan_interleave(c_in, lam, w))
    else:
        f_bar = naive_concat(pooled, s)

    pre = matvec(w1_active, f_bar)
    if b1 is not None:
        pre = add(pre, b1)
    hidden = relu(pre)

    logits = matvec(w2_active, hidden)
    if b2_active is not None:
        logits = add(logits, b2_active)
    gate = sigmoid(logits)
    return mul(f_t, reshape(gate, (m, 1, 1)))


def ase_forward(
    f_t: Tensor,
    s: ScalePair,
    weights: AseWeights,
    mode: str,
    w: float,
    c_in: int,
    lam: int,
) -> Tensor:
    """Gate the channels of ``f_t``, slicing the full MLP to width ``w``."""
    if mode not in ("interweave", "naive"):
        raise ConfigError(f"unknown ase mode {mode!r}")
    full_cols = c_in + 2 * lam if mode == "interweave" else c_in + 2
    if weights.w1.data.shape != (2 * c_in, full_cols):
        raise ShapeError(f"w1 shape {weights.w1.shape}, expected (2*{c_in}, {full_cols})")
    if weights.w2.data.shape != (c_in, 2 * c_in):
        raise ShapeError(f"w2 shape {weights.w2.shape}, expected ({c_in}, 2*{c_in})")
    if f_t.data.ndim != 3:
        raise ShapeError(f"expected (m, H, W) feature, got {f_t.shape}")
    m = f_t.data.shape[0]
    prefix = active_prefix_len(mode, w, c_in, lam)
    return ase_apply(
        f_t,
        s,
        take_slice(weights.w1, (slice(None), slice(0, prefix))),
        take_slice(weights.w2, (slice(0, m), slice(None))),
        weights.b1,
        take_slice(weights.b2, (slice(0, m),)) if weights.b2 is not None else None,
        mode,
        w,
        c_in,
        lam,
    )
