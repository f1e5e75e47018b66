"""Analytic parameter and FLOP counts.

Convention: one multiply-accumulate is 2 FLOPs; bias additions are counted
separately. Elementwise work (activations, gating multiplies, residual adds,
pooling, the bilinear skip) is excluded, so ratios between widths reflect
the matrix work that actually dominates runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..backbone import BackboneConfig
from ..interweave import active_prefix_len, floor_scaled
from ..scales import ScalePair
from ..upsampler import target_size


def conv2d_flops(c_in: int, c_out: int, k: int, h: int, w: int) -> int:
    return 2 * k * k * c_in * c_out * h * w


def bias_flops(c_out: int, h: int, w: int) -> int:
    return c_out * h * w


def matvec_flops(rows: int, cols: int) -> int:
    return 2 * rows * cols


@dataclass(frozen=True)
class FlopsBreakdown:
    shallow: int
    blocks_conv: int
    blocks_bias: int
    blocks_ase: int
    tail: int
    upsampler: int

    @property
    def total(self) -> int:
        return (self.shallow + self.blocks_conv + self.blocks_bias
                + self.blocks_ase + self.tail + self.upsampler)


def params_at(cfg: BackboneConfig, width: float) -> int:
    """Parameter count of the subnet executed at the given width."""
    c, k = cfg.c_in, cfg.kernel
    m = floor_scaled(c, width)
    total = c * 3 * k * k + c  # shallow
    block = m * c * k * k + m + c * m * k * k + c
    if cfg.ase_mode != "off":
        prefix = active_prefix_len(cfg.ase_mode, width, c, cfg.lam)
        block += 2 * c * prefix + m * 2 * c
        if cfg.ase_bias:
            block += 2 * c + m
    total += cfg.n_blocks * block
    total += c * c * k * k + c  # tail
    total += cfg.hidden * (c + 4) + cfg.hidden + 3 * cfg.hidden + 3
    return total


def flops_breakdown(cfg: BackboneConfig, width: float, lr_h: int, lr_w: int,
                    s: ScalePair) -> FlopsBreakdown:
    """FLOPs to reconstruct one (lr_h, lr_w) input at the given scale."""
    c, k = cfg.c_in, cfg.kernel
    m = floor_scaled(c, width)
    n = cfg.n_blocks
    shallow = conv2d_flops(3, c, k, lr_h, lr_w) + bias_flops(c, lr_h, lr_w)
    blocks_conv = n * (conv2d_flops(c, m, k, lr_h, lr_w)
                       + conv2d_flops(m, c, k, lr_h, lr_w))
    blocks_bias = n * (bias_flops(m, lr_h, lr_w) + bias_flops(c, lr_h, lr_w))
    blocks_ase = 0
    if cfg.ase_mode != "off":
        prefix = active_prefix_len(cfg.ase_mode, width, c, cfg.lam)
        per = matvec_flops(2 * c, prefix) + matvec_flops(m, 2 * c)
        if cfg.ase_bias:
            per += 2 * c + m
        blocks_ase = n * per
    tail = conv2d_flops(c, c, k, lr_h, lr_w) + bias_flops(c, lr_h, lr_w)
    hr_h, hr_w = target_size(lr_h, lr_w, s)
    pixels = hr_h * hr_w
    per_pixel = (matvec_flops(cfg.hidden, c + 4) + cfg.hidden
                 + matvec_flops(3, cfg.hidden) + 3)
    return FlopsBreakdown(shallow, blocks_conv, blocks_bias, blocks_ase,
                          tail, pixels * per_pixel)


def flops(cfg: BackboneConfig, width: float, lr_h: int, lr_w: int,
          s: ScalePair) -> int:
    return flops_breakdown(cfg, width, lr_h, lr_w, s).total


def format_with_share(value: int, share: float) -> str:
    """Render a count next to its fraction of the full model, Table style."""
    return f"{value:,} ({share * 100.0:.2f}%)"
