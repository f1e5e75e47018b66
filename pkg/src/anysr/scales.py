"""Scale set, its ordered group partition, and the training-task sampler.

Scales live on a listed grid (default 1.1 to 4.0, step 0.1) split into T
contiguous groups of near-equal size. Group t is served by the subnet of
width ``widths[t-1]``; asymmetric pairs are classified by their harder
(larger) axis. Group indices ``t`` are 1-based throughout the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigError

_BOUND_EPS = 1e-9


@dataclass(frozen=True)
class ScalePair:
    """Anisotropic upsampling factor (vertical, horizontal), each > 1."""

    s_h: float
    s_w: float

    def __post_init__(self):
        if not (self.s_h > 1.0 and self.s_w > 1.0):
            raise ConfigError(f"scale factors must exceed 1, got ({self.s_h}, {self.s_w})")

    @property
    def hardest(self) -> float:
        return max(self.s_h, self.s_w)


@dataclass(frozen=True)
class ScaleGroups:
    """Ordered partition of the scale grid with its width schedule.

    ``groups[t-1]`` holds the grid values of group t, ``upper_bounds[t-1]``
    its boundary (the group's max; the last equals s_max), ``widths[t-1]``
    the channel fraction of subnet t.
    """

    groups: Tuple[Tuple[float, ...], ...]
    widths: Tuple[float, ...]
    upper_bounds: Tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.groups)

    @property
    def s_max(self) -> float:
        return self.upper_bounds[-1]

    @property
    def all_scales(self) -> Tuple[float, ...]:
        return tuple(v for g in self.groups for v in g)


def build_groups(scales: Sequence[float], t_count: int, widths: Sequence[float]) -> ScaleGroups:
    """Split a sorted scale grid into ``t_count`` contiguous, even groups.

    Boundaries fall at floor(n*t/T), which reproduces the published 7/8/7/8
    grouping for the 30-value default grid with T=4.
    """
    scales = [float(s) for s in scales]
    if not scales:
        raise ConfigError("empty scale grid")
    if sorted(set(scales)) != scales:
        raise ConfigError("scale grid must be sorted ascending and unique")
    if scales[0] <= 1.0:
        raise ConfigError(f"scales must exceed 1, got {scales[0]}")
    if t_count < 1:
        raise ConfigError(f"need at least one group, got {t_count}")
    if t_count > len(scales):
        raise ConfigError(f"cannot split {len(scales)} scales into {t_count} groups")
    widths = [float(w) for w in widths]
    if len(widths) != t_count:
        raise ConfigError(f"{len(widths)} widths for {t_count} groups")
    if any(not (0.0 < w <= 1.0) for w in widths):
        raise ConfigError(f"widths must lie in (0, 1], got {widths}")
    if any(a >= b for a, b in zip(widths, widths[1:])):
        raise ConfigError(f"widths must be strictly increasing, got {widths}")
    if widths[-1] != 1.0:
        raise ConfigError(f"largest width must be 1.0, got {widths[-1]}")

    n = len(scales)
    bounds = [n * t // t_count for t in range(t_count + 1)]
    groups = tuple(tuple(scales[bounds[t]:bounds[t + 1]]) for t in range(t_count))
    upper = tuple(g[-1] for g in groups)
    return ScaleGroups(groups=groups, widths=tuple(widths), upper_bounds=upper)


def group_of(groups: ScaleGroups, s: ScalePair) -> int:
    """Smallest t whose upper bound covers the pair's harder axis (1-based)."""
    hardest = s.hardest
    if hardest > groups.s_max + _BOUND_EPS:
        raise ConfigError(f"scale {hardest} above s_max {groups.s_max}")
    for t, bound in enumerate(groups.upper_bounds, start=1):
        if hardest <= bound + _BOUND_EPS:
            return t
    raise ConfigError(f"scale {hardest} not covered by any group")


def width_of(groups: ScaleGroups, t: int) -> float:
    if not 1 <= t <= groups.count:
        raise ConfigError(f"group index {t} out of range 1..{groups.count}")
    return groups.widths[t - 1]


def sample_task(groups: ScaleGroups, p: float, rng: np.random.Generator) -> Tuple[int, ScalePair]:
    """Draw a training task: t uniform over 1..T, promoted to T with
    probability p, then a scale uniform over group t's grid values.

    Consumes exactly three draws (t, promotion coin, scale index) regardless
    of p, so different p values keep downstream rng streams aligned.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"reset probability must lie in [0,1], got {p}")
    t = int(rng.integers(groups.count)) + 1
    if rng.random() < p:
        t = groups.count
    grid = groups.groups[t - 1]
    value = grid[int(rng.integers(len(grid)))]
    return t, ScalePair(value, value)


def default_grid(start: float = 1.1, stop: float = 4.0, step: float = 0.1) -> List[float]:
    """Inclusive arithmetic grid, rounded to avoid float drift (1.1..4.0)."""
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 6) for i in range(count)]


class TaskSampler:
    """Stateful sampler owning split rng streams for trainer reproducibility.

    Streams are spawned per concern (t draw, promotion coin, scale index) so
    a run that never touches the t/coin streams still consumes the scale
    stream identically. ``sample`` implements the standard task draw;
    ``sample_full`` always returns t=T yet draws the scale from the same
    stream, giving trajectory equivalence with p=1.
    """

    def __init__(self, groups: ScaleGroups, p: float, seed_seq: np.random.SeedSequence):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"reset probability must lie in [0,1], got {p}")
        self.groups = groups
        self.p = p
        t_seq, coin_seq, scale_seq = seed_seq.spawn(3)
        self._gen_t = np.random.default_rng(t_seq)
        self._gen_coin = np.random.default_rng(coin_seq)
        self._gen_scale = np.random.default_rng(scale_seq)

    def _draw_scale(self, t: int) -> ScalePair:
        grid = self.groups.groups[t - 1]
        value = grid[int(self._gen_scale.integers(len(grid)))]
        return ScalePair(value, value)

    def sample(self) -> Tuple[int, ScalePair]:
        t = int(self._gen_t.integers(self.groups.count)) + 1
        if self._gen_coin.random() < self.p:
            t = self.groups.count
        return t, self._draw_scale(t)

    def sample_full(self) -> Tuple[int, ScalePair]:
        t = self.groups.count
        return t, self._draw_scale(t)

    def sample_pretrain(self) -> Tuple[int, ScalePair]:
        """Full-width task with the scale uniform over the whole grid."""
        grid = self.groups.all_scales
        value = grid[int(self._gen_scale.integers(len(grid)))]
        return self.groups.count, ScalePair(value, value)
