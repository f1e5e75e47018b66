"""Command line interface.

Subcommands: train, eval, flops, inspect. Every run prints the canonical
effective configuration first, so logs are self-describing. Exit codes:
0 success, 1 usage/configuration error, 2 data or I/O error, 3 numeric
failure during training.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

import numpy as np

from .backbone import build_backbone
from .bench.evaluate import evaluate, write_report
from .bench.flops import flops, format_with_share, params_at
from .bench.imageio import load_dir
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, echo_config, parse_config
from .errors import ConfigError, DataError, NumericError, ShapeError
from .scales import ScalePair
from .trainer import train


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="anysr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")

    p_train = sub.add_parser("train", help="train or fine-tune a weight store")
    common(p_train)
    p_train.add_argument("--seed", type=int, help="override train.seed")
    p_train.add_argument("--steps", type=int, help="override train.steps")
    p_train.add_argument("--data", help="override data.train_dir")
    p_train.add_argument("--out", help="override io.checkpoint_out")

    p_eval = sub.add_parser("eval", help="benchmark a checkpoint on a PNG directory")
    common(p_eval)
    p_eval.add_argument("--checkpoint", help="override io.checkpoint_in")
    p_eval.add_argument("--data", help="override data.eval_dir")
    p_eval.add_argument("--scales", help="override eval.scales (comma list)")
    p_eval.add_argument("--mode", choices=("subnet", "full"), help="override eval.mode")
    p_eval.add_argument("--out", help="override io.report (CSV path)")

    p_flops = sub.add_parser("flops", help="print the analytic cost table")
    common(p_flops)
    p_flops.add_argument("--size", type=int, help="override eval.flops_size")

    p_inspect = sub.add_parser("inspect", help="describe a checkpoint file")
    p_inspect.add_argument("checkpoint")
    return parser


def _flag_overrides(args, mapping) -> List[str]:
    extra = []
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            extra.append(f"{key}={value}")
    return extra


def _load(args, mapping) -> RunConfig:
    overrides = list(args.overrides) + _flag_overrides(args, mapping)
    return parse_config(args.config, overrides)


def _require(rc: RunConfig, key: str) -> str:
    value = rc[key]
    if not value:
        raise ConfigError(f"{key} must be set for this command")
    return value


def cmd_train(args) -> int:
    rc = _load(args, {"seed": "train.seed", "steps": "train.steps",
                      "data": "data.train_dir", "out": "io.checkpoint_out"})
    sys.stdout.write(echo_config(rc))
    cfg = rc.backbone_config()
    groups = rc.groups()
    tc = rc.train_config()
    images = [img for _, img in load_dir(_require(rc, "data.train_dir"))]
    out_path = _require(rc, "io.checkpoint_out")
    if rc["io.checkpoint_in"]:
        store = load_checkpoint(rc["io.checkpoint_in"])
        if store.config != cfg:
            raise ConfigError(
                f"checkpoint architecture {store.config} does not match the "
                f"configured model {cfg}")
    else:
        init_seq = np.random.SeedSequence(tc.seed).spawn(3)[0]
        store = build_backbone(cfg, np.random.default_rng(init_seq))
    loss_log = rc["io.loss_log"] or out_path + ".loss.csv"
    _, rows = train(store, groups, images, tc,
                    checkpoint_path=out_path, loss_log_path=loss_log)
    last = rows[-1].loss if rows else float("nan")
    sys.stdout.write(f"trained {len(rows)} steps, final loss {last!r}\n")
    sys.stdout.write(f"checkpoint: {out_path}\nloss log: {loss_log}\n")
    return 0


def cmd_eval(args) -> int:
    rc = _load(args, {"checkpoint": "io.checkpoint_in", "data": "data.eval_dir",
                      "scales": "eval.scales", "mode": "eval.mode",
                      "out": "io.report"})
    sys.stdout.write(echo_config(rc))
    store = load_checkpoint(_require(rc, "io.checkpoint_in"))
    groups = rc.groups()
    variant = f"ase={store.config.ase_mode} p={rc['train.p']!r}"
    report = evaluate(store, groups, _require(rc, "data.eval_dir"),
                      scales=rc["eval.scales"], mode=rc["eval.mode"],
                      psnr_mode=rc["eval.psnr"], variant=variant)
    sys.stdout.write(report.to_table())
    if rc["io.report"]:
        write_report(report, rc["io.report"])
        sys.stdout.write(f"report: {rc['io.report']}\n")
    return 0


def cmd_flops(args) -> int:
    rc = _load(args, {"size": "eval.flops_size"})
    sys.stdout.write(echo_config(rc))
    cfg = rc.backbone_config()
    groups = rc.groups()
    size = rc["eval.flops_size"]
    header = f"{'t':>3} {'w':>5} {'scale':>6} {'params':>24} {'flops':>28}"
    sys.stdout.write(header + "\n")
    full_params = params_at(cfg, 1.0)
    for t in range(1, groups.count + 1):
        w = groups.widths[t - 1]
        p = params_at(cfg, w)
        for value in rc["eval.scales"]:
            s = ScalePair(float(value), float(value))
            cost = flops(cfg, w, size, size, s)
            cost_full = flops(cfg, 1.0, size, size, s)
            sys.stdout.write(
                f"{t:>3} {w:>5g} {value:>6g} "
                f"{format_with_share(p, p / full_params):>24} "
                f"{format_with_share(cost, cost / cost_full):>28}\n")
    return 0


def cmd_inspect(args) -> int:
    store = load_checkpoint(args.checkpoint)
    cfg = store.config
    sys.stdout.write(f"checkpoint: {args.checkpoint}\n")
    for line in (f"c_in={cfg.c_in}", f"n_blocks={cfg.n_blocks}",
                 f"kernel={cfg.kernel}", f"lambda={cfg.lam}",
                 f"widths={','.join(repr(w) for w in cfg.widths)}",
                 f"ase_mode={cfg.ase_mode}", f"ase_bias={str(cfg.ase_bias).lower()}",
                 f"hidden={cfg.hidden}", f"dtype={cfg.dtype}"):
        sys.stdout.write(line + "\n")
    sys.stdout.write(f"{'tensor':<24} {'shape':<20} {'dtype':<8} {'params':>10}\n")
    for name in store.names():
        arr = store[name].data
        shape = "x".join(str(d) for d in arr.shape)
        sys.stdout.write(f"{name:<24} {shape:<20} {arr.dtype.name:<8} {arr.size:>10}\n")
    total = store.total_params()
    sys.stdout.write(f"total parameters: {total:,}\n")
    for w in cfg.widths:
        p = params_at(cfg, w)
        sys.stdout.write(f"width {w:g}: {format_with_share(p, p / total)}\n")
    return 0


_HANDLERS = {"train": cmd_train, "eval": cmd_eval, "flops": cmd_flops,
             "inspect": cmd_inspect}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help prints and exits 0
        return int(exc.code or 0)
    except ConfigError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    try:
        return _HANDLERS[args.command](args)
    except NumericError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 3
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 1
    except (DataError, OSError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return 2
    except ShapeError as exc:
        sys.stderr.write(f"internal shape error: {exc}\n")
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
