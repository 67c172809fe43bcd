import argparse
import json
from pathlib import Path

from nlpca_validation.presets import sweep_for
from nlpca_validation.validation import run_sweep, select_model


def run(preset: str, doc: str):
    ap = argparse.ArgumentParser(description=doc)
    ap.add_argument("--restarts", type=int, default=None)
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--base-seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=f"runs/{preset}")
    args = ap.parse_args()

    cfg = sweep_for(preset, restarts=args.restarts, paper_scale=args.paper_scale,
                    base_seed=args.base_seed)
    report = run_sweep(cfg, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.with_suffix(".json").write_text(report.to_json())
    out.with_suffix(".csv").write_text(report.to_csv())

    print(f"{'nu':>9} {'train':>8} {'test':>8} {'missing':>8}")
    for i, nu in enumerate(report.nu_grid):
        row = [report.medians[m][i] for m in ("train_error", "test_error", "missing_error")]
        print(f"{nu:9.2e} " + " ".join("    --  " if v is None else f"{v:8.4f}" for v in row))
    print(json.dumps({"selected_nu": select_model(report),
                      "failed_cells": report.metadata["failed_cells"]}))
