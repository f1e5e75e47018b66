"""Elastic training loop.

Each step draws one (subnet index, scale) task, builds a batch of LR/HR
patch pairs for that scale, runs the corresponding width, and applies a
masked Adam update that leaves every parameter outside the subnet (and its
moment buffers) bit-identical. Two phases share the machinery:

  pretrain  always full width, scales uniform over the whole grid
  anysr     group-aware sampling with promotion probability p

Reproducibility: a run is a pure function of (seed, config, dataset). The
seed root spawns three child streams, in order: weight init (used by the
CLI when no checkpoint is given), task sampling, and data sampling. Task
draws consume a fixed number of values per step regardless of outcome, so
trajectories with p = 1.0 match forced-full-width runs exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .backbone import SharedWeightStore, active_slices, reconstruct, subnet_view
from .bench.resample import bicubic_resize
from .checkpoint import save_checkpoint
from .errors import ConfigError, DataError, NumericError
from .numerics import (AdamState, Tensor, adam_step, backward, init_adam_state,
                       l1_loss, mean_of)
from .scales import ScaleGroups, ScalePair, TaskSampler, group_of
from .upsampler import target_size

PHASES = ("pretrain", "anysr")


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int
    phase: str = "anysr"
    p: float = 0.6
    lr0: float = 1e-5
    decay_every: int = 1000
    decay_factor: float = 0.5
    batch: int = 8
    patch: int = 32
    seed: int = 0
    checkpoint_every: int = 0  # 0 disables periodic saves

    def __post_init__(self):
        if self.total_steps < 0:
            raise ConfigError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.phase not in PHASES:
            raise ConfigError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0,1], got {self.p}")
        if self.lr0 <= 0.0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        if self.decay_every < 1:
            raise ConfigError(f"decay_every must be >= 1, got {self.decay_every}")
        if not 0.0 < self.decay_factor <= 1.0:
            raise ConfigError(f"decay_factor must lie in (0,1], got {self.decay_factor}")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        if self.patch < 8:
            raise ConfigError(f"patch must be >= 8, got {self.patch}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")


@dataclass(frozen=True)
class TrainingPair:
    lr_patch: Tensor
    hr_patch: Tensor
    scale: ScalePair


@dataclass(frozen=True)
class LossRow:
    step: int
    t: int
    s_h: float
    s_w: float
    lr: float
    loss: float


@dataclass
class TrainState:
    adam: AdamState
    forward_count: int = 0


def lr_schedule(cfg: TrainConfig, step: int) -> float:
    """Stepwise decay: lr0 * factor ** (step // decay_every)."""
    return cfg.lr0 * cfg.decay_factor ** (step // cfg.decay_every)


def make_training_pair(image: np.ndarray, s: ScalePair, patch: int,
                       rng: np.random.Generator,
                       dtype=np.float64) -> TrainingPair:
    """Random HR crop whose size maps onto an exact patch x patch LR grid.

    The LR patch is the bicubic degradation of the crop, so training and
    evaluation share one degradation operator.
    """
    if image.ndim != 3 or image.shape[0] != 3:
        raise DataError(f"expected (3, H, W) training image, got {image.shape}")
    _, h, w = image.shape
    hr_h, hr_w = target_size(patch, patch, s)
    if h < hr_h or w < hr_w:
        raise DataError(
            f"image {h}x{w} smaller than {hr_h}x{hr_w} crop for scale "
            f"({s.s_h}, {s.s_w}) at patch {patch}")
    top = int(rng.integers(h - hr_h + 1))
    left = int(rng.integers(w - hr_w + 1))
    crop = image[:, top:top + hr_h, left:left + hr_w]
    lr = bicubic_resize(crop, patch, patch)
    return TrainingPair(Tensor(lr.astype(dtype)), Tensor(crop.astype(dtype)), s)


def train_step(store: SharedWeightStore, groups: ScaleGroups, t: int,
               batch: Sequence[TrainingPair], state: TrainState, lr: float,
               allow_any_scale: bool = False) -> float:
    """One masked update on subnet t from a single-task batch; returns loss."""
    if not batch:
        raise ConfigError("empty batch")
    s = batch[0].scale
    if any(pair.scale != s for pair in batch):
        raise ConfigError("a batch must use a single scale")
    if not allow_any_scale and group_of(groups, s) != t:
        raise ConfigError(f"scale ({s.s_h}, {s.s_w}) is not served by subnet {t}")
    view = subnet_view(store, t, groups)
    losses = []
    for pair in batch:
        out = reconstruct(view, pair.lr_patch, pair.scale, allow_any_scale=allow_any_scale)
        losses.append(l1_loss(out, pair.hr_patch))
        state.forward_count += 1
    loss = mean_of(losses)
    value = float(loss.item())
    if not np.isfinite(value):
        raise NumericError(f"non-finite loss {value}")
    backward(loss)
    grads = store.grads()
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            store.zero_grads()
            raise NumericError(f"non-finite gradient for {name!r}")
    adam_step(store.arrays(), grads, state.adam, lr, active=active_slices(view))
    store.zero_grads()
    return value


def train(store: SharedWeightStore, groups: ScaleGroups,
          dataset: Sequence[np.ndarray], cfg: TrainConfig,
          sampler: Optional[TaskSampler] = None,
          checkpoint_path: Optional[str] = None,
          loss_log_path: Optional[str] = None) -> Tuple[TrainState, List[LossRow]]:
    """Run the loop; returns optimizer state and the per-step loss rows.

    On a numeric failure the store is untouched by the failing step; the
    last good weights are saved (when a checkpoint path is given) before
    the error propagates.
    """
    if not dataset:
        raise DataError("empty training dataset")
    root = np.random.SeedSequence(cfg.seed)
    _, task_seq, data_seq = root.spawn(3)
    if sampler is None:
        sampler = TaskSampler(groups, cfg.p, task_seq)
    data_rng = np.random.default_rng(data_seq)
    state = TrainState(adam=init_adam_state(store.arrays()))
    dtype = store.config.np_dtype
    pretrain = cfg.phase == "pretrain"
    rows: List[LossRow] = []

    for step in range(cfg.total_steps):
        t, s = sampler.sample_pretrain() if pretrain else sampler.sample()
        batch = []
        for _ in range(cfg.batch):
            image = dataset[int(data_rng.integers(len(dataset)))]
            batch.append(make_training_pair(image, s, cfg.patch, data_rng, dtype))
        lr = lr_schedule(cfg, step)
        try:
            value = train_step(store, groups, t, batch, state, lr,
                               allow_any_scale=pretrain)
        except NumericError:
            if checkpoint_path is not None:
                save_checkpoint(store, checkpoint_path)
            raise
        rows.append(LossRow(step, t, s.s_h, s.s_w, lr, value))
        if (checkpoint_path is not None and cfg.checkpoint_every > 0
                and (step + 1) % cfg.checkpoint_every == 0):
            save_checkpoint(store, checkpoint_path)

    if checkpoint_path is not None:
        save_checkpoint(store, checkpoint_path)
    if loss_log_path is not None:
        write_loss_log(rows, loss_log_path)
    return state, rows


def loss_csv(rows: Sequence[LossRow]) -> str:
    lines = ["step,t,s_h,s_w,lr,loss"]
    for r in rows:
        lines.append(f"{r.step},{r.t},{r.s_h!r},{r.s_w!r},{r.lr!r},{r.loss!r}")
    return "\n".join(lines) + "\n"


def write_loss_log(rows: Sequence[LossRow], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(loss_csv(rows))
