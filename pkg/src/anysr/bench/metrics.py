"""Reconstruction quality metrics."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, ShapeError

# BT.601 luma coefficients, applied to [0,1] RGB
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)

PSNR_MODES = ("rgb", "y")


def luma(img: np.ndarray) -> np.ndarray:
    """BT.601 luminance of a (3, H, W) image."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ShapeError(f"expected (3, H, W) image, got shape {img.shape}")
    return np.einsum("c,chw->hw", _LUMA, np.asarray(img, dtype=np.float64))


def psnr(a: np.ndarray, b: np.ndarray, mode: str = "rgb") -> float:
    """Peak signal-to-noise ratio in dB for [0,1] images.

    mode "rgb" averages squared error over all channels; mode "y" compares
    BT.601 luminance only. Identical inputs give math.inf.
    """
    if mode not in PSNR_MODES:
        raise ConfigError(f"psnr mode must be one of {PSNR_MODES}, got {mode!r}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    if mode == "y":
        a, b = luma(a), luma(b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
