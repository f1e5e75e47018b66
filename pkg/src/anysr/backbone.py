"""Elastic feature extractor over one shared weight store.

The store holds a shallow conv (3 to C_in), N residual blocks, a tail conv,
and the shared upsampler. A width-t view activates, per block, the first
m_t = floor(C_in * w_t) output channels of conv_a (with bias), the first m_t
input channels of conv_b, and the matching gating-MLP slices; shallow, tail,
conv_b output channels, and the upsampler stay full. Because every slice is
a leading prefix, the active sets nest: the narrowest subnet is contained in
every wider one, and the widest view is the whole store.

Block structure (per block, residual):

    u = ReLU(conv_a(x))          m_t channels
    g = gate(u, scale)           identity when the gate is disabled
    x = x + conv_b(g)            back to C_in channels

followed by tail(x) + shallow feature as a global residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError, ShapeError
from .interweave import ASE_MODES, AseWeights, active_prefix_len, ase_apply, floor_scaled
from .numerics import Tensor, add, conv2d, relu, take_slice
from .scales import ScaleGroups, ScalePair, group_of, width_of
from .upsampler import UpsamplerWeights, upsample

_DTYPES = {"float64": np.float64, "float32": np.float32}


@dataclass(frozen=True)
class BackboneConfig:
    c_in: int
    n_blocks: int
    kernel: int = 3
    lam: int = 4
    widths: Tuple[float, ...] = (0.5, 0.7, 0.9, 1.0)
    ase_mode: str = "interweave"
    ase_bias: bool = False
    hidden: int = 64
    dtype: str = "float64"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(float(w) for w in self.widths))
        if self.n_blocks < 1:
            raise ConfigError(f"need at least one block, got {self.n_blocks}")
        if self.kernel % 2 == 0 or self.kernel < 1:
            raise ConfigError(f"kernel size must be odd, got {self.kernel}")
        if self.lam < 1 or self.c_in // self.lam < 1:
            raise ConfigError(f"need floor(c_in/lam) >= 1, got c_in={self.c_in}, lam={self.lam}")
        if not self.widths or any(not (0.0 < w <= 1.0) for w in self.widths):
            raise ConfigError(f"widths must lie in (0, 1], got {self.widths}")
        if any(a >= b for a, b in zip(self.widths, self.widths[1:])):
            raise ConfigError(f"widths must be strictly increasing, got {self.widths}")
        if self.widths[-1] != 1.0:
            raise ConfigError(f"largest width must be 1.0, got {self.widths[-1]}")
        if floor_scaled(self.c_in, min(self.widths)) < 1:
            raise ConfigError(f"narrowest width leaves no channels: {self.c_in} * {min(self.widths)}")
        if self.ase_mode not in ASE_MODES:
            raise ConfigError(f"ase_mode must be one of {ASE_MODES}, got {self.ase_mode!r}")
        if self.hidden < 1:
            raise ConfigError(f"upsampler hidden size must be positive, got {self.hidden}")
        if self.dtype not in _DTYPES:
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")

    @property
    def np_dtype(self):
        return _DTYPES[self.dtype]

    @property
    def padding(self) -> int:
        return (self.kernel - 1) // 2

    def mid_channels(self, w: float) -> int:
        return floor_scaled(self.c_in, w)


def layout(cfg: BackboneConfig) -> Dict[str, Tuple[int, ...]]:
    """Tensor name to shape, in fixed registration order."""
    c, k = cfg.c_in, cfg.kernel
    shapes: Dict[str, Tuple[int, ...]] = {
        "shallow.kernel": (c, 3, k, k),
        "shallow.bias": (c,),
    }
    ase_cols = c + 2 * cfg.lam if cfg.ase_mode == "interweave" else c + 2
    for i in range(cfg.n_blocks):
        shapes[f"block{i}.conv_a.kernel"] = (c, c, k, k)
        shapes[f"block{i}.conv_a.bias"] = (c,)
        shapes[f"block{i}.conv_b.kernel"] = (c, c, k, k)
        shapes[f"block{i}.conv_b.bias"] = (c,)
        if cfg.ase_mode != "off":
            shapes[f"block{i}.ase.w1"] = (2 * c, ase_cols)
            shapes[f"block{i}.ase.w2"] = (c, 2 * c)
            if cfg.ase_bias:
                shapes[f"block{i}.ase.b1"] = (2 * c,)
                shapes[f"block{i}.ase.b2"] = (c,)
    shapes["tail.kernel"] = (c, c, k, k)
    shapes["tail.bias"] = (c,)
    shapes["up.mlp1"] = (cfg.hidden, c + 4)
    shapes["up.b1"] = (cfg.hidden,)
    shapes["up.mlp2"] = (3, cfg.hidden)
    shapes["up.b2"] = (3,)
    return shapes


# fan-in per tensor: uniform init bound is sqrt(1/fan_in)
def _fan_in(name: str, shape: Tuple[int, ...]) -> int:
    if name.endswith(".bias") or name in ("up.b1", "up.b2") or ".ase.b" in name:
        return max(int(np.prod(shape)), 1)
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    if len(shape) == 2:
        return shape[1]
    return max(int(np.prod(shape)), 1)


class SharedWeightStore:
    """All trainable tensors, each registered exactly once under a stable name."""

    def __init__(self, config: BackboneConfig, tensors: Dict[str, Tensor]):
        expected = layout(config)
        if list(tensors.keys()) != list(expected.keys()):
            raise ConfigError("tensor names do not match the configured layout")
        for name, tensor in tensors.items():
            if tensor.data.shape != expected[name]:
                raise ShapeError(f"{name}: shape {tensor.data.shape}, expected {expected[name]}")
        self.config = config
        self.tensors = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self):
        return list(self.tensors.keys())

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self.tensors.items()}

    def grads(self) -> Dict[str, Optional[np.ndarray]]:
        return {name: t.grad for name, t in self.tensors.items()}

    def zero_grads(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def total_params(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def upsampler_weights(self) -> UpsamplerWeights:
        return UpsamplerWeights(
            mlp1=self["up.mlp1"], b1=self["up.b1"], mlp2=self["up.mlp2"], b2=self["up.b2"]
        )

    def clone(self) -> "SharedWeightStore":
        copies = {
            name: Tensor(t.data.copy(), requires_grad=t.requires_grad)
            for name, t in self.tensors.items()
        }
        return SharedWeightStore(self.config, copies)


def build_backbone(cfg: BackboneConfig, rng: np.random.Generator) -> SharedWeightStore:
    """Initialize every tensor with uniform(-b, b), b = sqrt(1/fan_in)."""
    tensors: Dict[str, Tensor] = {}
    for name, shape in layout(cfg).items():
        bound = float(np.sqrt(1.0 / _fan_in(name, shape)))
        data = rng.uniform(-bound, bound, size=shape).astype(cfg.np_dtype)
        tensors[name] = Tensor(data, requires_grad=True)
    return SharedWeightStore(cfg, tensors)


@dataclass(frozen=True)
class SubnetView:
    """Width-t window over the store; holds no tensor data of its own."""

    store: SharedWeightStore
    groups: ScaleGroups
    t: int
    w: float
    m: int


def subnet_view(store: SharedWeightStore, t: int, groups: ScaleGroups) -> SubnetView:
    if tuple(groups.widths) != tuple(store.config.widths):
        raise ConfigError(
            f"group widths {groups.widths} disagree with model widths {store.config.widths}"
        )
    w = width_of(groups, t)
    return SubnetView(store=store, groups=groups, t=t, w=w, m=store.config.mid_channels(w))


def active_slices(view: SubnetView) -> Dict[str, Tuple[slice, ...]]:
    """Per tensor, the index region the view reads (empty tuple = all of it)."""
    cfg = view.store.config
    m = view.m
    out: Dict[str, Tuple[slice, ...]] = {}
    prefix = None
    if cfg.ase_mode != "off":
        prefix = active_prefix_len(cfg.ase_mode, view.w, cfg.c_in, cfg.lam)
    for name in view.store.names():
        if name.endswith("conv_a.kernel") or name.endswith("conv_a.bias"):
            out[name] = (slice(0, m),)
        elif name.endswith("conv_b.kernel"):
            out[name] = (slice(None), slice(0, m))
        elif name.endswith("ase.w1"):
            out[name] = (slice(None), slice(0, prefix))
        elif name.endswith("ase.w2") or name.endswith("ase.b2"):
            out[name] = (slice(0, m),)
        else:
            out[name] = ()
    return out


def count_params(store: SharedWeightStore, t: int, groups: ScaleGroups) -> int:
    view = subnet_view(store, t, groups)
    total = 0
    for name, region in active_slices(view).items():
        total += store[name].data[region].size
    return total


def _block_forward(x, s, parts, i, cfg, w):
    u = relu(conv2d(x, parts[f"block{i}.conv_a.kernel"], parts[f"block{i}.conv_a.bias"], cfg.padding))
    if cfg.ase_mode != "off":
        u = ase_apply(
            u,
            s,
            parts[f"block{i}.ase.w1"],
            parts[f"block{i}.ase.w2"],
            parts.get(f"block{i}.ase.b1"),
            parts.get(f"block{i}.ase.b2"),
            cfg.ase_mode,
            w,
            cfg.c_in,
            cfg.lam,
        )
    return add(x, conv2d(u, parts[f"block{i}.conv_b.kernel"], parts[f"block{i}.conv_b.bias"], cfg.padding))


def _forward_parts(parts, cfg: BackboneConfig, w: float, image: Tensor, s: ScalePair) -> Tensor:
    if image.data.ndim != 3 or image.data.shape[0] != 3:
        raise ShapeError(f"expected (3, H, W) input, got {image.shape}")
    f_s = conv2d(image, parts["shallow.kernel"], parts["shallow.bias"], cfg.padding)
    x = f_s
    for i in range(cfg.n_blocks):
        x = _block_forward(x, s, parts, i, cfg, w)
    tail = conv2d(x, parts["tail.kernel"], parts["tail.bias"], cfg.padding)
    return add(tail, f_s)


def _sliced_parts(view: SubnetView) -> Dict[str, Tensor]:
    """Materialize the view's weights, prefix slices copied contiguously."""
    parts: Dict[str, Tensor] = {}
    for name, region in active_slices(view).items():
        tensor = view.store[name]
        parts[name] = take_slice(tensor, region) if region else tensor
    return parts


def forward(view: SubnetView, image: Tensor, s: ScalePair, allow_any_scale: bool = False) -> Tensor:
    """Deep feature of the width-t subnet: (C_in, H, W) from a (3, H, W) input."""
    if not allow_any_scale:
        owner = group_of(view.groups, s)
        if owner != view.t:
            raise ConfigError(
                f"scale ({s.s_h}, {s.s_w}) belongs to group {owner}, not {view.t}; "
                "pass allow_any_scale=True to override"
            )
    return _forward_parts(_sliced_parts(view), view.store.config, view.w, image, s)


def reconstruct(view: SubnetView, image: Tensor, s: ScalePair, allow_any_scale: bool = False) -> Tensor:
    """Full pipeline: subnet feature then the shared upsampler."""
    feat = forward(view, image, s, allow_any_scale=allow_any_scale)
    return upsample(feat, image, s, view.store.upsampler_weights())


@dataclass
class StandaloneNet:
    """Self-contained dense network copied out of one view (no slicing left)."""

    cfg: BackboneConfig
    t: int
    w: float
    m: int
    tensors: Dict[str, Tensor] = field(repr=False)

    def forward(self, image: Tensor, s: ScalePair) -> Tensor:
        return _forward_parts(self.tensors, self.cfg, self.w, image, s)

    def reconstruct(self, image: Tensor, s: ScalePair) -> Tensor:
        feat = self.forward(image, s)
        weights = UpsamplerWeights(
            mlp1=self.tensors["up.mlp1"],
            b1=self.tensors["up.b1"],
            mlp2=self.tensors["up.mlp2"],
            b2=self.tensors["up.b2"],
        )
        return upsample(feat, image, s, weights)

    def param_count(self) -> int:
        return sum(t.data.size for t in self.tensors.values())


def extract_standalone(store: SharedWeightStore, t: int, groups: ScaleGroups) -> StandaloneNet:
    """Copy the active slices of view t into an independent dense network."""
    view = subnet_view(store, t, groups)
    tensors: Dict[str, Tensor] = {}
    for name, region in active_slices(view).items():
        tensors[name] = Tensor(np.array(store[name].data[region], order="C", copy=True))
    return StandaloneNet(cfg=store.config, t=t, w=view.w, m=view.m, tensors=tensors)
