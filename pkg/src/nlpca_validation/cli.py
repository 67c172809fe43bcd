"""Command-line front end.

    nlpca-val generate helix --n 20 --sigma 0.4 --seed 1 --out helix.csv
    nlpca-val train helix.csv --layers 1-10-3 --nu 0.001 --out model.json
    nlpca-val sweep helix --restarts 11 --out-prefix runs/helix
    nlpca-val select runs/helix.json
    nlpca-val curve model.json --n-grid 200 --out curve.csv

Exit status: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Failures print a one-line JSON object on standard error.  Relative output
paths are resolved against ``$NLPCA_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .datagen import (DataError, GeneratorConfig, generate, mask_one_of_d, read_csv, write_csv,
                      zscore)
from .nlpca import TrainConfig, forward, load_model, save_model, train
from .optimizer import CgConfig, OptimizationError
from .presets import PRESETS, sweep_for
from .validation import SweepConfig, SweepReport, run_sweep, select_model

OUTPUT_DIR_ENV = "NLPCA_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def out_path(path) -> Path:
    path = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def parse_layers(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(p) for p in text.split("-"))
    except ValueError:
        raise UsageError(f"layers must look like 1-10-3, got {text!r}") from None
    if len(sizes) < 2 or min(sizes) < 1:
        raise UsageError(f"layers must look like 1-10-3, got {text!r}")
    return sizes


def _emit(obj) -> None:
    print(json.dumps(obj))


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(args.family, args.n, args.sigma,
                          None if args.t_range is None else tuple(args.t_range), args.seed)
    data, _ = generate(cfg)
    if args.mask_one:
        data = mask_one_of_d(data, args.seed)
    path, mask_path = write_csv(data, out_path(args.out))
    _emit({"data": str(path), "mask": str(mask_path), "n_samples": data.n_samples,
           "dim": data.dim, "config": asdict(cfg)})
    return EXIT_OK


def cmd_train(args) -> int:
    layers = parse_layers(args.layers)
    data = read_csv(args.data, args.mask)
    extra = {}
    if args.zscore:
        data, mean, std = zscore(data)
        extra["normalization"] = {"mean": mean.tolist(), "std": std.tolist()}
    if layers[-1] != data.dim:
        raise DataError(f"output layer {layers[-1]} does not match data dimension {data.dim}")
    cfg = TrainConfig(layers, args.nu, CgConfig(max_iterations=args.iters), init_seed=args.seed,
                      score_decay=not args.no_score_decay)
    model = train(data, cfg)
    path = out_path(args.out)
    save_model(model, path, extra)
    _emit({"model": str(path), **asdict(model.final_loss)})
    return EXIT_OK


def _sweep_config(args) -> SweepConfig:
    if args.config:
        try:
            cfg = SweepConfig.from_dict(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"{args.config}: cannot load sweep config ({exc})") from exc
        changes = {}
        if args.restarts is not None:
            changes["n_restarts"] = args.restarts
        if args.nu is not None:
            changes["nu_grid"] = tuple(args.nu)
        if args.base_seed is not None:
            changes["base_seed"] = args.base_seed
        return replace(cfg, **changes)
    if args.preset is None:
        raise UsageError("give a preset name or --config")
    return sweep_for(args.preset, restarts=args.restarts, paper_scale=args.paper_scale,
                     nu_grid=args.nu, base_seed=args.base_seed, iterations=args.iters)


def cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    report = run_sweep(cfg, workers=workers)
    prefix = args.out_prefix or cfg.name
    json_path = out_path(f"{prefix}.json")
    csv_path = out_path(f"{prefix}.csv")
    json_path.write_text(report.to_json())
    csv_path.write_text(report.to_csv())
    _emit({"report": str(json_path), "csv": str(csv_path), "selected_nu": select_model(report),
           "failed_cells": report.metadata["failed_cells"]})
    return EXIT_OK


def cmd_select(args) -> int:
    try:
        doc = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.report}: cannot read report ({exc})") from exc
    report = SweepReport.from_dict(doc)
    _emit({"nu": select_model(report)})
    return EXIT_OK


def cmd_curve(args) -> int:
    model, doc = load_model(args.model)
    if model.params.latent_dim != 1:
        raise DataError("curve export needs a one-dimensional latent space")
    if args.n_grid < 2:
        raise UsageError("--n-grid must be at least 2")
    lo, hi = float(model.scores.min()), float(model.scores.max())
    pad = 0.05 * (hi - lo)
    z = np.linspace(lo - pad, hi + pad, args.n_grid)
    x = forward(model.params, z[:, None])
    norm = doc.get("normalization")
    if norm:
        x = x * np.asarray(norm["std"]) + np.asarray(norm["mean"])
    path = out_path(args.out)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z"] + [f"x{j + 1}" for j in range(x.shape[1])])
        for zi, row in zip(z, x):
            w.writerow([repr(float(zi))] + [repr(float(v)) for v in row])
    _emit({"curve": str(path), "rows": args.n_grid})
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nlpca-val", description="Inverse nonlinear PCA with missing-data validation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    g.add_argument("family", choices=sorted(PRESETS))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--sigma", type=float, default=None,
                   help="noise standard deviation (default 0.4; 1.0 for gauss2d)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--t-range", type=float, nargs=2, default=None)
    g.add_argument("--mask-one", action="store_true", help="hide one random coordinate per row")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit an inverse NLPCA model")
    t.add_argument("data")
    t.add_argument("--mask", default=None, help="mask CSV (default: <stem>.mask.csv if present)")
    t.add_argument("--layers", required=True)
    t.add_argument("--nu", type=float, default=0.0)
    t.add_argument("--iters", type=int, default=5000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--zscore", action="store_true")
    t.add_argument("--no-score-decay", action="store_true",
                   help="penalize only the weight matrices, not the latent scores")
    t.add_argument("--out", default="model.json")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="validate a grid of weight-decay values")
    s.add_argument("preset", nargs="?", choices=sorted(PRESETS))
    s.add_argument("--config", default=None, help="JSON SweepConfig instead of a preset")
    s.add_argument("--restarts", type=int, default=None)
    s.add_argument("--paper-scale", action="store_true",
                   help="use the full restart counts (100 helix, 500 gauss2d)")
    s.add_argument("--nu", type=float, nargs="+", default=None)
    s.add_argument("--base-seed", type=int, default=None)
    s.add_argument("--iters", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out-prefix", default=None)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("select", help="pick nu from a sweep report")
    c.add_argument("report")
    c.set_defaults(func=cmd_select)

    k = sub.add_parser("curve", help="sample the trained component curve")
    k.add_argument("model")
    k.add_argument("--n-grid", type=int, default=200)
    k.add_argument("--out", default="curve.csv")
    k.set_defaults(func=cmd_curve)
    return p


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "generate":
            if args.sigma is None:
                args.sigma = 1.0 if args.family == "gauss2d" else 0.4
            if args.out is None:
                args.out = f"{args.family}.csv"
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except DataError as exc:
        return _fail(EXIT_DATA, "data", exc)
    except OSError as exc:
        return _fail(EXIT_DATA, "io", exc)
    except (OptimizationError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", exc)
    except ValueError as exc:
        return _fail(EXIT_USAGE, "usage", exc)


if __name__ == "__main__":
    sys.exit(main())
