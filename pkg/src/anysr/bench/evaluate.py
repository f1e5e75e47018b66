"""Benchmark harness: models vs. classical bicubic on PNG datasets.

Protocol per image and scale s: crop the ground truth to the largest size
the scale maps onto exactly, bicubic-degrade the crop to LR, reconstruct,
and score PSNR against the crop. Two execution modes are compared:

  subnet  run the width the scale's group trained for
  full    run the widest network at every scale

Images are processed by a thread pool (size capped by ANYSR_THREADS), but
reduction is in filename order, so reports are deterministic.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..backbone import SharedWeightStore, count_params, reconstruct, subnet_view
from ..errors import ConfigError, DataError
from ..numerics import Tensor, no_grad
from ..scales import ScaleGroups, ScalePair, group_of
from ..upsampler import target_size
from .flops import flops
from .imageio import load_dir
from .metrics import psnr
from .resample import bicubic_resize

EVAL_MODES = ("subnet", "full")


def worker_count() -> int:
    """Thread pool size: ANYSR_THREADS if set, else min(4, cpu count)."""
    raw = os.environ.get("ANYSR_THREADS")
    if raw is None:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ANYSR_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"ANYSR_THREADS must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class EvalRow:
    dataset: str
    scale: float
    mode: str
    t: int
    w: float
    psnr_model: float
    psnr_bicubic: float
    params: int
    flops: int
    flops_ratio: float


@dataclass(frozen=True)
class EvalReport:
    variant: str
    psnr_mode: str
    rows: tuple

    def to_csv(self) -> str:
        lines = ["dataset,scale,mode,t,w,psnr_model,psnr_bicubic,params,flops,flops_ratio"]
        for r in self.rows:
            lines.append(
                f"{r.dataset},{r.scale!r},{r.mode},{r.t},{r.w!r},"
                f"{_fmt_db(r.psnr_model)},{_fmt_db(r.psnr_bicubic)},"
                f"{r.params},{r.flops},{r.flops_ratio:.6f}"
            )
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        head = (f"variant={self.variant}  psnr={self.psnr_mode}  "
                "(FLOPs: MAC=2, per mean LR input)")
        cols = ["dataset", "scale", "mode", "t", "w", "psnr", "bicubic", "params", "flops"]
        body = [[r.dataset, f"{r.scale:g}", r.mode, str(r.t), f"{r.w:g}",
                 _fmt_db(r.psnr_model), _fmt_db(r.psnr_bicubic),
                 f"{r.params:,}", f"{r.flops:,} ({r.flops_ratio * 100.0:.2f}%)"]
                for r in self.rows]
        widths = [max(len(row[i]) for row in [cols] + body) for i in range(len(cols))]
        fmt = "  ".join(f"{{:>{w}}}" for w in widths)
        lines = [head, fmt.format(*cols)]
        lines += [fmt.format(*row) for row in body]
        return "\n".join(lines) + "\n"


def _fmt_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.4f}"


def degrade(image: np.ndarray, s: ScalePair):
    """Crop to the exactly-scalable size, then bicubic-downscale.

    Returns (hr_crop, lr). Raises DataError when the image is too small to
    leave at least a 4-pixel LR side.
    """
    _, h, w = image.shape
    lr_h, lr_w = int(h / s.s_h), int(w / s.s_w)
    if lr_h < 4 or lr_w < 4:
        raise DataError(f"image {h}x{w} too small for scale {s.s_h}x{s.s_w}")
    hr_h, hr_w = target_size(lr_h, lr_w, s)
    crop = image[:, :hr_h, :hr_w]
    return crop, bicubic_resize(crop, lr_h, lr_w)


def _score_one(image, s, view, allow_any, psnr_mode, dtype):
    crop, lr = degrade(image, s)
    with no_grad():
        out = reconstruct(view, Tensor(lr.astype(dtype)), s, allow_any_scale=allow_any)
    model = np.clip(out.data.astype(np.float64), 0.0, 1.0)
    baseline = bicubic_resize(lr, crop.shape[1], crop.shape[2])
    return (psnr(model, crop, psnr_mode), psnr(baseline, crop, psnr_mode),
            lr.shape[1], lr.shape[2])


def evaluate(store: SharedWeightStore, groups: ScaleGroups, dataset_dir, scales,
             mode: str = "subnet", psnr_mode: str = "rgb",
             variant: str | None = None) -> EvalReport:
    """Score a weight store over a PNG directory at the given scales."""
    if mode not in EVAL_MODES:
        raise ConfigError(f"mode must be one of {EVAL_MODES}, got {mode!r}")
    if not scales:
        raise ConfigError("need at least one evaluation scale")
    images = load_dir(dataset_dir)
    dataset = os.path.basename(os.path.normpath(os.fspath(dataset_dir)))
    cfg = store.config
    if variant is None:
        variant = f"ase={cfg.ase_mode}"

    rows = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for scale in scales:
            s = ScalePair(float(scale), float(scale))
            t_native = group_of(groups, s)
            t = groups.count if mode == "full" else t_native
            view = subnet_view(store, t, groups)
            allow_any = t != t_native
            results = list(pool.map(
                lambda item: _score_one(item[1], s, view, allow_any,
                                        psnr_mode, cfg.np_dtype),
                images,
            ))
            model_db = [r[0] for r in results]
            base_db = [r[1] for r in results]
            cost = sum(flops(cfg, view.w, r[2], r[3], s) for r in results)
            cost_full = sum(flops(cfg, 1.0, r[2], r[3], s) for r in results)
            rows.append(EvalRow(
                dataset=dataset, scale=float(scale), mode=mode, t=t,
                w=view.w,
                psnr_model=float(np.mean(model_db)),
                psnr_bicubic=float(np.mean(base_db)),
                params=count_params(store, t, groups),
                flops=cost // len(results),
                flops_ratio=cost / cost_full,
            ))
    return EvalReport(variant=variant, psnr_mode=psnr_mode, rows=tuple(rows))


def write_report(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
