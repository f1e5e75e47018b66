"""Procedural training/eval images: gradients, checkerboards, smooth noise.

Everything is drawn from a single Generator in a fixed order, so a seed
pins the dataset bytes exactly. High-contrast checkerboards (random square
period 6..9 and phase) dominate the mix: sharp grid edges are where a
learned prior can beat classical interpolation, so they are what the
desk-scale training demo feeds on. Gradients and low-pass noise are mixed
in at a tenth each so the corpus is not pure step functions.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError
from .imageio import save_png

KINDS = ("gradient", "checker", "noise")


def _coords(size: int):
    axis = (np.arange(size) + 0.5) / size
    return np.meshgrid(axis, axis, indexing="ij")


def _gradient(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = _coords(size)
    theta = rng.uniform(0.0, np.pi)
    proj = np.cos(theta) * xx + np.sin(theta) * yy
    proj = (proj - proj.min()) / (proj.max() - proj.min())
    c0 = rng.uniform(0.0, 1.0, size=3)
    c1 = rng.uniform(0.0, 1.0, size=3)
    return c0[:, None, None] + proj[None] * (c1 - c0)[:, None, None]


def _checker(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = _coords(size)
    period = int(rng.integers(6, 10))
    phase_x = rng.uniform(0.0, period)
    phase_y = rng.uniform(0.0, period)
    u = xx * size + phase_x
    v = yy * size + phase_y
    cells = (np.floor(u / period) + np.floor(v / period)) % 2
    # high-contrast two-color palette: dark vs light per channel
    c0 = rng.uniform(0.0, 0.25, size=3)
    c1 = rng.uniform(0.75, 1.0, size=3)
    return np.where(cells[None] > 0.5, c1[:, None, None], c0[:, None, None])


def _noise(rng: np.random.Generator, size: int) -> np.ndarray:
    sigma = rng.uniform(1.5, 2.5)
    raw = rng.standard_normal((3, size, size))
    freq = np.fft.fftfreq(size)
    fy, fx = np.meshgrid(freq, freq, indexing="ij")
    transfer = np.exp(-2.0 * np.pi ** 2 * sigma ** 2 * (fy ** 2 + fx ** 2))
    smooth = np.fft.ifft2(np.fft.fft2(raw) * transfer[None]).real
    lo, hi = smooth.min(), smooth.max()
    return 0.1 + 0.8 * (smooth - lo) / (hi - lo)


def synthetic_image(rng: np.random.Generator, size: int = 128) -> np.ndarray:
    """One random (3, size, size) image in [0, 1].

    Mix: checkerboard 0.8, gradient 0.1, filtered noise 0.1.
    """
    draw = rng.random()
    if draw < 0.8:
        img = _checker(rng, size)
    elif draw < 0.9:
        img = _gradient(rng, size)
    else:
        img = _noise(rng, size)
    return np.clip(img, 0.0, 1.0)


def write_dataset(path: str | os.PathLike, count: int, seed: int,
                  size: int = 128) -> list:
    """Write `count` seeded PNGs into a directory; returns the file paths."""
    if count < 1 or size < 8:
        raise ConfigError(f"need count >= 1 and size >= 8, got {count}, {size}")
    os.makedirs(path, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    paths = []
    for i in range(count):
        name = os.path.join(path, f"synth_{i:03d}.png")
        save_png(name, synthetic_image(rng, size))
        paths.append(name)
    return paths
