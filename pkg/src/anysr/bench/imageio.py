"""PNG loading and saving.

Images travel through the engine as float64 (3, H, W) arrays in [0, 1].
16-bit PNGs are reduced to 8 significant bits (high byte) before scaling,
grayscale is replicated across channels, and alpha is dropped.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image as PILImage

from ..errors import DataError, ShapeError


def load_png(path: str | os.PathLike) -> np.ndarray:
    try:
        with PILImage.open(path) as handle:
            img = handle
            if img.mode.startswith("I;16"):
                raw = np.asarray(img, dtype=np.uint16)
                arr = (raw >> 8).astype(np.uint8)
            else:
                if img.mode != "RGB":
                    img = img.convert("RGB")
                arr = np.asarray(img, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise DataError(f"image not found: {path}") from exc
    except (OSError, SyntaxError) as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=0)
    else:
        arr = arr.transpose(2, 0, 1)
    return arr.astype(np.float64) / 255.0


def save_png(path: str | os.PathLike, img: np.ndarray) -> None:
    if img.ndim != 3 or img.shape[0] != 3:
        raise ShapeError(f"expected (3, H, W) image, got shape {img.shape}")
    quant = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    PILImage.fromarray(quant.transpose(1, 2, 0), mode="RGB").save(path, format="PNG")


def load_dir(path: str | os.PathLike) -> list[tuple[str, np.ndarray]]:
    """Load every .png under a directory, sorted by filename."""
    try:
        names = sorted(n for n in os.listdir(path) if n.lower().endswith(".png"))
    except OSError as exc:
        raise DataError(f"cannot list dataset directory {path}: {exc}") from exc
    if not names:
        raise DataError(f"no .png files in {path}")
    return [(name, load_png(os.path.join(path, name))) for name in names]
