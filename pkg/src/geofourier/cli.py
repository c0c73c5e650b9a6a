"""Command-line entry point: gendata, encode, train, eval, verify, ablate.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .artifacts import (
    check_compatible,
    embeddings_bytes,
    embeddings_csv,
    metrics_table,
    read_checkpoint,
    read_dataset,
    write_checkpoint,
    write_dataset,
    write_report,
)
from .errors import ConfigError, GeoFourierError
from .fusion import VARIANTS, FeatureVectors, fuse
from .geometry import parse_geometry
from .tasks import GenConfig, gen_pairs
from .training import RunConfig, check_dataset, evaluate, geometry_features, init_model, pair_features, train
from .verify import CHECKS, mutated, run_checks

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3

# flag name -> RunConfig field
_OVERRIDES = {
    "f_min": float, "f_max": float, "w_axis": int, "d": int,
    "hidden_mag": int, "hidden_phase": int, "hidden_final": int, "hidden_head": int,
    "task": str, "pair_type": str, "per_class": int, "seed": int, "runs": int,
    "lr": float, "weight_decay": float, "batch_size": int, "epochs": int, "variant": str,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # main() prints the message and usage and maps it to exit code 1
        raise ConfigError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    for name, typ in _OVERRIDES.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)


def load_config(args, base: Optional[Dict] = None) -> RunConfig:
    data = dict(base or {})
    if getattr(args, "config", None):
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for name in _OVERRIDES:
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _say(msg: str = "") -> None:
    print(msg, flush=True)


# ----------------------------------------------------------------- commands


def cmd_gendata(args) -> int:
    cfg = load_config(args)
    ds = gen_pairs(GenConfig(cfg.task, cfg.pair_type, cfg.per_class), cfg.seed)
    write_dataset(args.out, ds, cfg)
    _say(f"wrote {len(ds)} {cfg.task} {cfg.pair_type} pairs to {args.out} (config {cfg.config_hash()})")
    for name, n in ds.histogram().items():
        _say(f"  {name:<12} {n}")
    return EXIT_OK


def _read_geometries(path) -> List:
    geoms = []
    text = Path(path).read_text() if path != "-" else sys.stdin.read()
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fmt = "geojson" if line.startswith("{") else "wkt"
        try:
            geoms.append(parse_geometry(line, fmt))
        except GeoFourierError as exc:
            raise type(exc)(f"{path}:{n}: {exc}") from exc
    return geoms


def cmd_encode(args) -> int:
    if args.checkpoint:
        params, header = read_checkpoint(args.checkpoint)
        cfg = RunConfig.from_dict(header["config"])
    else:
        cfg = load_config(args)
        params = init_model(cfg, cfg.seed)
        _say(f"note: no checkpoint given, using freshly initialized parameters (seed {cfg.seed})")
    geoms = _read_geometries(args.input)
    z, phi = geometry_features(geoms, cfg.grid())
    rows = fuse(FeatureVectors(z, phi), params, cfg.variant) if len(geoms) else np.zeros((0, cfg.d))
    h = cfg.config_hash()
    Path(args.out).write_text(embeddings_csv(rows, h))
    if args.binary:
        Path(args.binary).write_bytes(embeddings_bytes(rows, h))
    if args.features:
        Path(args.features).write_text(embeddings_csv(np.hstack([z, phi]), h, prefix="f"))
    _say(f"encoded {len(geoms)} geometries into {rows.shape[1] if rows.ndim == 2 else cfg.d}-d embeddings -> {args.out}")
    return EXIT_OK


def _summary(values: List[Dict[str, float]]) -> Dict[str, Dict[str, float]]:
    keys = sorted(values[0]) if values else []
    return {k: {"mean": float(np.mean([v[k] for v in values])), "std": float(np.std([v[k] for v in values]))} for k in keys}


def _train_runs(cfg: RunConfig, ds, feats, log_each: bool = True):
    runs = []
    for r in range(cfg.runs):
        seed = cfg.seed + r

        def log(row, seed=seed):
            if log_each:
                vals = " ".join(f"{k}={v:.4f}" for k, v in row.items() if k != "epoch")
                _say(f"  seed {seed} epoch {row['epoch']:>3} {vals}")

        runs.append((seed, train(cfg, ds, seed, feats, log=log)))
    return runs


def cmd_train(args) -> int:
    ds, header = read_dataset(args.data)
    cfg = load_config(args, base=header["config"])
    check_dataset(ds, cfg)
    feats = pair_features(ds, cfg.grid())
    runs = _train_runs(cfg, ds, feats, log_each=not args.quiet)
    first = runs[0][1]
    write_checkpoint(args.checkpoint, first.params, cfg, cfg.grid().grid_id)
    report = {
        "command": "train",
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "dataset_config_hash": header["config_hash"],
        "runs": [{"seed": s, "history": r.history, "test": r.test} for s, r in runs],
        "test_summary": _summary([r.test for _, r in runs]),
    }
    if args.report:
        write_report(args.report, report)
    _say(metrics_table([(f"seed {s}", r.test) for s, r in runs]))
    _say("mean +- std: " + ", ".join(f"{k} {v['mean']:.4f} +- {v['std']:.4f}" for k, v in report["test_summary"].items()))
    return EXIT_OK


def cmd_eval(args) -> int:
    params, ck = read_checkpoint(args.checkpoint)
    ds, header = read_dataset(args.data)
    check_compatible(ck, header)
    cfg = RunConfig.from_dict(ck["config"])
    feats = pair_features(ds, cfg.grid())
    splits = [args.split] if args.split else ["train", "val", "test"]
    results = {s: evaluate(params, feats.take(ds.indices(s)), cfg) for s in splits if len(ds.indices(s))}
    report = {"command": "eval", "config_hash": ck["config_hash"], "dataset_config_hash": header["config_hash"],
              "metrics": results}
    if args.report:
        write_report(args.report, report)
    _say(json.dumps(report, sort_keys=True))
    _say(metrics_table(list(results.items())))
    return EXIT_OK


def cmd_verify(args) -> int:
    names = args.check or list(CHECKS)
    if args.mutate:
        with mutated(args.mutate):
            results = run_checks(names, args.tol, args.count, args.seed)
    else:
        results = run_checks(names, args.tol, args.count, args.seed)
    for r in results:
        _say(r.line())
    failed = [r.name for r in results if not r.passed]
    if args.report:
        write_report(args.report, {"command": "verify", "checks": [
            {"name": r.name, "error": r.error, "tol": r.tol, "passed": r.passed} for r in results]})
    _say(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_ablate(args) -> int:
    ds, header = read_dataset(args.data)
    base = load_config(args, base=header["config"])
    check_dataset(ds, base)
    feats = pair_features(ds, base.grid())
    results = {}
    for variant in VARIANTS:
        cfg = base.with_overrides(variant=variant)
        runs = _train_runs(cfg, ds, feats, log_each=False)
        results[variant] = _summary([r.test for _, r in runs])
        _say(f"{variant:<8} " + ", ".join(f"{k} {v['mean']:.4f} +- {v['std']:.4f}" for k, v in results[variant].items()))
    if args.report:
        write_report(args.report, {"command": "ablate", "config": base.to_dict(),
                                   "config_hash": base.config_hash(), "variants": results})
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geofourier", description="Fourier-transform geometry encoder toolkit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gendata", help="generate a labeled synthetic pair dataset")
    _add_config_flags(g)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gendata)

    e = sub.add_parser("encode", help="embed geometries (one WKT or GeoJSON per line)")
    _add_config_flags(e)
    e.add_argument("input")
    e.add_argument("--checkpoint")
    e.add_argument("--out", required=True)
    e.add_argument("--binary", help="also write the binary embeddings file here")
    e.add_argument("--features", help="also write raw magnitude/phase features here")
    e.set_defaults(fn=cmd_encode)

    t = sub.add_parser("train", help="train encoder and head on a dataset")
    _add_config_flags(t)
    t.add_argument("--data", required=True)
    t.add_argument("--checkpoint", required=True)
    t.add_argument("--report")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(fn=cmd_train)

    v = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    v.add_argument("--checkpoint", required=True)
    v.add_argument("--data", required=True)
    v.add_argument("--split", choices=["train", "val", "test"])
    v.add_argument("--report")
    v.set_defaults(fn=cmd_eval)

    c = sub.add_parser("verify", help="run oracle, property and gradient checks")
    c.add_argument("--check", action="append", choices=sorted(CHECKS))
    c.add_argument("--tol", type=float, help="hold every check to this tolerance")
    c.add_argument("--count", type=int, help="samples for the oracle checks (default 100 / 10)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mutate", choices=["sinc"], help="inject a known bug to test the checks")
    c.add_argument("--report")
    c.set_defaults(fn=cmd_verify)

    a = sub.add_parser("ablate", help="compare fusion variants on a dataset")
    _add_config_flags(a)
    a.add_argument("--data", required=True)
    a.add_argument("--report")
    a.set_defaults(fn=cmd_ablate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return EXIT_USAGE
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    except (GeoFourierError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
