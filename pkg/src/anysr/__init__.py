"""Elastic-width, arbitrary-scale super-resolution engine (CPU, numpy-backed).

One shared weight store runs at several widths: narrow prefixes of the block
mid-channels form nested subnets, each owning a contiguous range of
upsampling scales. A scale-conditioned gating block injects the scale pair
into fixed feature positions so every subnet reads it from the same columns.
"""

__version__ = "0.1.0"

from .errors import AnySRError, ConfigError, DataError, NumericError, ShapeError

__all__ = [
    "AnySRError",
    "ConfigError",
    "DataError",
    "NumericError",
    "ShapeError",
    "__version__",
]
