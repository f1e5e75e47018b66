"""Flat key=value run configuration.

One namespace of dotted keys covers model, scale grid, training, data and
evaluation settings. '#' starts a comment, later assignments win, unknown
keys are rejected with their source line, and every value is range-checked
at parse time. ``echo_config`` renders the full effective configuration in
a canonical form that parses back to an equal RunConfig, so a run can be
reproduced from its own log header.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

from .backbone import BackboneConfig
from .errors import ConfigError
from .interweave import ASE_MODES
from .scales import ScaleGroups, build_groups, default_grid
from .trainer import PHASES, TrainConfig


def _int(raw: str) -> int:
    return int(raw, 10)


def _float(raw: str) -> float:
    return float(raw)


def _bool(raw: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ValueError(f"expected true or false, got {raw!r}")


def _str(raw: str) -> str:
    return raw


def _float_list(raw: str) -> Tuple[float, ...]:
    if not raw:
        raise ValueError("empty list")
    return tuple(float(part) for part in raw.split(","))


def _grid(raw: str) -> Tuple[float, ...]:
    # either start:stop:step or an explicit comma list
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid spec must be start:stop:step, got {raw!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid range {raw!r}")
        return tuple(default_grid(start, stop, step))
    return _float_list(raw)


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}, got {v}"


def _positive(v):
    return None if v > 0 else f"must be positive, got {v}"


def _unit_interval(v):
    return None if 0.0 <= v <= 1.0 else f"must lie in [0, 1], got {v}"


def _unit_open_closed(v):
    return None if 0.0 < v <= 1.0 else f"must lie in (0, 1], got {v}"


def _choice(options):
    def check(v):
        return None if v in options else f"must be one of {options}, got {v!r}"
    return check


def _each_width(v):
    bad = [w for w in v if not 0.0 < w <= 1.0]
    return None if not bad else f"widths must lie in (0, 1], got {bad}"


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], object]
    default: object
    check: Optional[Callable[[object], Optional[str]]] = None


KEYS: Dict[str, _Key] = {
    "model.c_in": _Key(_int, 16, _at_least(1)),
    "model.n_blocks": _Key(_int, 2, _at_least(1)),
    "model.kernel": _Key(_int, 3, _at_least(1)),
    "model.lambda": _Key(_int, 4, _at_least(1)),
    "model.ase_mode": _Key(_str, "interweave", _choice(ASE_MODES)),
    "model.ase_bias": _Key(_bool, False),
    "model.hidden": _Key(_int, 64, _at_least(1)),
    "model.dtype": _Key(_str, "float64", _choice(("float32", "float64"))),
    "scales.grid": _Key(_grid, tuple(default_grid())),
    "scales.t": _Key(_int, 4, _at_least(1)),
    "scales.widths": _Key(_float_list, (0.5, 0.7, 0.9, 1.0), _each_width),
    "train.phase": _Key(_str, "anysr", _choice(PHASES)),
    "train.steps": _Key(_int, 0, _at_least(0)),
    "train.p": _Key(_float, 0.6, _unit_interval),
    "train.lr0": _Key(_float, 1e-5, _positive),
    "train.decay_every": _Key(_int, 1000, _at_least(1)),
    "train.decay_factor": _Key(_float, 0.5, _unit_open_closed),
    "train.batch": _Key(_int, 8, _at_least(1)),
    "train.patch": _Key(_int, 32, _at_least(8)),
    "train.seed": _Key(_int, 0, _at_least(0)),
    "train.checkpoint_every": _Key(_int, 0, _at_least(0)),
    "data.train_dir": _Key(_str, ""),
    "data.eval_dir": _Key(_str, ""),
    "io.checkpoint_in": _Key(_str, ""),
    "io.checkpoint_out": _Key(_str, ""),
    "io.loss_log": _Key(_str, ""),
    "io.report": _Key(_str, ""),
    "eval.scales": _Key(_float_list, (1.5, 2.0, 3.0, 4.0)),
    "eval.mode": _Key(_str, "subnet", _choice(("subnet", "full"))),
    "eval.psnr": _Key(_str, "rgb", _choice(("rgb", "y"))),
    "eval.flops_size": _Key(_int, 48, _at_least(4)),
}


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, object]

    def __getitem__(self, key: str):
        return self.values[key]

    def backbone_config(self) -> BackboneConfig:
        v = self.values
        return BackboneConfig(
            c_in=v["model.c_in"], n_blocks=v["model.n_blocks"],
            kernel=v["model.kernel"], lam=v["model.lambda"],
            widths=tuple(v["scales.widths"]), ase_mode=v["model.ase_mode"],
            ase_bias=v["model.ase_bias"], hidden=v["model.hidden"],
            dtype=v["model.dtype"])

    def groups(self) -> ScaleGroups:
        v = self.values
        return build_groups(v["scales.grid"], v["scales.t"], v["scales.widths"])

    def train_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            total_steps=v["train.steps"], phase=v["train.phase"],
            p=v["train.p"], lr0=v["train.lr0"],
            decay_every=v["train.decay_every"],
            decay_factor=v["train.decay_factor"], batch=v["train.batch"],
            patch=v["train.patch"], seed=v["train.seed"],
            checkpoint_every=v["train.checkpoint_every"])


def _parse_assignment(values: Dict[str, object], key: str, raw: str, origin: str) -> None:
    spec = KEYS.get(key)
    if spec is None:
        raise ConfigError(f"unknown key {key!r} ({origin})")
    try:
        value = spec.parse(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({origin}): {exc}") from exc
    if spec.check is not None:
        problem = spec.check(value)
        if problem is not None:
            raise ConfigError(f"{key}: {problem} ({origin})")
    values[key] = value


def parse_text(text: str, values: Dict[str, object], source: str) -> None:
    for line_no, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key = value ({source} line {line_no})")
        key, raw = body.split("=", 1)
        _parse_assignment(values, key.strip(), raw.strip(), f"{source} line {line_no}")


def parse_config(path: Optional[str] = None,
                 overrides: Sequence[str] = ()) -> RunConfig:
    """Defaults, then the file, then --set overrides; fully validated."""
    values = {key: spec.default for key, spec in KEYS.items()}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            parse_text(fh.read(), values, path)
    for i, item in enumerate(overrides, 1):
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r} (--set #{i})")
        key, raw = item.split("=", 1)
        _parse_assignment(values, key.strip(), raw.strip(), f"--set #{i}")
    rc = RunConfig(values)
    # surface cross-key problems (width count vs groups, kernel parity, ...)
    rc.backbone_config()
    rc.groups()
    rc.train_config()
    return rc


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, str)):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    raise ConfigError(f"cannot render config value {value!r}")


def echo_config(rc: RunConfig) -> str:
    """Canonical text form; parsing it back reproduces the RunConfig."""
    lines = [f"{key} = {_render(rc.values[key])}" for key in sorted(rc.values)]
    return "\n".join(lines) + "\n"
