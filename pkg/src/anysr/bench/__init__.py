"""Benchmarking: image I/O, bicubic baseline, metrics, cost model, datasets."""

from .evaluate import EvalReport, EvalRow, degrade, evaluate, worker_count, write_report
from .flops import (FlopsBreakdown, bias_flops, conv2d_flops, flops,
                    flops_breakdown, format_with_share, matvec_flops, params_at)
from .imageio import load_dir, load_png, save_png
from .metrics import luma, psnr
from .resample import bicubic_kernel, bicubic_resize
from .synthetic import synthetic_image, write_dataset

__all__ = [
    "EvalReport", "EvalRow", "degrade", "evaluate", "worker_count",
    "write_report", "FlopsBreakdown", "bias_flops", "conv2d_flops", "flops",
    "flops_breakdown", "format_with_share", "matvec_flops", "params_at",
    "load_dir", "load_png", "save_png", "luma", "psnr", "bicubic_kernel",
    "bicubic_resize", "synthetic_image", "write_dataset",
]
