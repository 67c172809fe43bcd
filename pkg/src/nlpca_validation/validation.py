"""Model selection for inverse NLPCA: test-set error vs missing-data error.

``run_sweep`` trains one model per (nu, restart) cell and scores each model
twice on the same validation samples:

* test-set error: project every complete validation sample onto the curve
  and average the squared distances;
* missing-data error: hide entries of the validation samples, estimate them
  from the remaining entries, and average the squared estimation errors.

Every error is a mean over scalar entries.  Cells are independent jobs;
seeds depend only on ``base_seed`` and the restart index, never on
execution order, so the report is identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .datagen import (DataError, GeneratorConfig, MaskedDataset, generate, mask_one_of_d,
                      quadratic_truth)
from .nlpca import INFER_CG, TrainConfig, estimate_missing_batch, project_batch, train
from .optimizer import CgConfig, LineSearchConfig, OptimizationError

log = logging.getLogger(__name__)

ERROR_CONVENTION = "per-entry mean"
METRICS = ("train_error", "test_error", "missing_error")
MASKING_RULES = ("one_of_d",)

# Stream ids mixed into the restart seed.
_TRAIN_DATA, _VALID_DATA, _MASK, _INIT, _INFER = range(5)


def derive_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def test_set_error(model, test: MaskedDataset, cg: CgConfig = INFER_CG, n_starts: int = 10,
                   seed: int = 0) -> float:
    """Mean squared distance (per entry) from complete test samples to the curve."""
    if test.n_samples == 0:
        raise DataError("empty test set")
    if not test.fully_observed:
        raise DataError("test-set validation needs fully observed samples")
    _, dist = project_batch(model, test, cg, n_starts, seed)
    return float(dist.mean())


def missing_data_error(model, incomplete: MaskedDataset, cg: CgConfig = INFER_CG,
                       n_starts: int = 10, seed: int = 0) -> float:
    """Mean squared error over all hidden entries, estimated from each row's visible ones."""
    if incomplete.ground_truth is None:
        raise DataError("missing-data validation needs the ground truth of hidden entries")
    missing = ~incomplete.mask
    bad = np.flatnonzero(~missing.any(axis=1))
    if bad.size:
        raise DataError(f"row {int(bad[0])} has no missing entry to estimate")
    completed = estimate_missing_batch(model, incomplete, cg, n_starts, seed)
    err = (completed - incomplete.ground_truth)[missing]
    return float(np.mean(err * err))


def curve_test_error(curve_points: np.ndarray, test: MaskedDataset) -> float:
    """Test-set error of a curve given as a dense polyline of points (nearest point)."""
    pts = np.asarray(curve_points, dtype=float)
    best = np.full(test.n_samples, np.inf)
    for chunk in np.array_split(np.arange(len(pts)), max(1, len(pts) // 2000)):
        d = ((test.values[:, None, :] - pts[None, chunk, :]) ** 2).mean(axis=2)
        best = np.minimum(best, d.min(axis=1))
    return float(best.mean())


def _coerce(cls, value):
    return cls(**value) if isinstance(value, dict) else value


@dataclass(frozen=True)
class SweepConfig:
    name: str
    nu_grid: tuple[float, ...]
    n_restarts: int
    train_data: GeneratorConfig
    validation_data: GeneratorConfig
    layer_sizes: tuple[int, ...]
    cg: CgConfig = field(default_factory=CgConfig)
    init_scale: float = 1.0
    score_decay: bool = True
    infer_cg: CgConfig = INFER_CG
    n_starts: int = 10
    masking: str = "one_of_d"
    # True: new train/validation data for every restart; False: one dataset shared by all.
    fresh_data: bool = True
    base_seed: int = 0
    error_convention: str = ERROR_CONVENTION

    def __post_init__(self):
        grid = tuple(float(v) for v in self.nu_grid)
        if not grid:
            raise ValueError("nu_grid must not be empty")
        if min(grid) < 0:
            raise ValueError("nu values must be nonnegative")
        object.__setattr__(self, "nu_grid", grid)
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.masking not in MASKING_RULES:
            raise ValueError(f"unknown masking rule {self.masking!r}")
        if self.error_convention != ERROR_CONVENTION:
            raise ValueError(f"only the {ERROR_CONVENTION!r} convention is implemented")
        for name, cls in (("train_data", GeneratorConfig), ("validation_data", GeneratorConfig),
                          ("cg", CgConfig), ("infer_cg", CgConfig)):
            value = getattr(self, name)
            if isinstance(value, dict):
                if "line_search" in value:
                    value = {**value, "line_search": _coerce(LineSearchConfig, value["line_search"])}
                if "t_range" in value and value["t_range"] is not None:
                    value = {**value, "t_range": tuple(value["t_range"])}
                object.__setattr__(self, name, cls(**value))
        if self.layer_sizes[-1] != self.train_data_dim:
            raise ValueError(f"output layer {self.layer_sizes[-1]} does not match "
                             f"{self.train_data.family} data dimension {self.train_data_dim}")

    @property
    def train_data_dim(self) -> int:
        return 3 if self.train_data.family == "helix" else 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        return cls(**d)

    def train_config(self, nu: float, restart: int) -> TrainConfig:
        return TrainConfig(self.layer_sizes, nu, self.cg,
                           init_seed=derive_seed(self.base_seed + restart, _INIT),
                           init_scale=self.init_scale, score_decay=self.score_decay)

    def datasets(self, restart: int):
        """Training set, complete validation set and its masked twin for one restart."""
        seed = self.base_seed + restart if self.fresh_data else self.base_seed
        tr, _ = generate(_with_seed(self.train_data, derive_seed(seed, _TRAIN_DATA)))
        va, _ = generate(_with_seed(self.validation_data, derive_seed(seed, _VALID_DATA)))
        return tr, va, mask_one_of_d(va, derive_seed(seed, _MASK))


def _with_seed(cfg: GeneratorConfig, seed: int) -> GeneratorConfig:
    return GeneratorConfig(cfg.family, cfg.n_samples, cfg.noise_sigma, cfg.t_range, seed)


def run_cell(config: SweepConfig, i_nu: int, restart: int) -> dict:
    nu = config.nu_grid[i_nu]
    cell = {"nu": nu, "restart": restart, "status": "ok"}
    try:
        tr, va, masked = config.datasets(restart)
        model = train(tr, config.train_config(nu, restart))
        infer_seed = derive_seed(config.base_seed + restart, _INFER)
        cell["train_error"] = model.final_loss.reconstruction
        cell["test_error"] = test_set_error(model, va, config.infer_cg, config.n_starts, infer_seed)
        cell["missing_error"] = missing_data_error(model, masked, config.infer_cg,
                                                   config.n_starts, infer_seed)
        cell["sum_sq_weights"] = model.params.sum_sq_weights()
    except (OptimizationError, FloatingPointError) as exc:
        cell = {"nu": nu, "restart": restart, "status": f"failed: {exc}"}
    else:
        if not all(math.isfinite(cell[m]) for m in METRICS):
            cell = {"nu": nu, "restart": restart, "status": "failed: non-finite error"}
    return cell


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class SweepReport:
    config: dict
    cells: list[dict]
    medians: dict[str, list]
    metadata: dict

    @property
    def nu_grid(self) -> list[float]:
        return list(self.config["nu_grid"])

    def values(self, metric: str, i_nu: int) -> list[float]:
        nu = self.nu_grid[i_nu]
        return [c[metric] for c in self.cells if c["nu"] == nu and c["status"] == "ok"]

    def to_dict(self) -> dict:
        return {"config": self.config, "medians": self.medians, "metadata": self.metadata,
                "cells": self.cells}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        try:
            return cls(d["config"], d["cells"], d["medians"], d["metadata"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed sweep report: missing {exc}") from exc

    def to_csv(self) -> str:
        """Tidy long format: one row per (nu, restart, metric), medians as restart 'median'."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["nu", "restart", "metric", "value"])
        for c in self.cells:
            if c["status"] != "ok":
                continue
            for m in METRICS:
                w.writerow([repr(c["nu"]), c["restart"], m, repr(c[m])])
        for i, nu in enumerate(self.nu_grid):
            for m in METRICS:
                v = self.medians[m][i]
                w.writerow([repr(nu), "median", m, "" if v is None else repr(v)])
        return buf.getvalue()


def _median(values: list[float]) -> float | None:
    return float(np.median(values)) if values else None


def assemble_report(config: SweepConfig, cells: list[dict]) -> SweepReport:
    cells = sorted(cells, key=lambda c: (config.nu_grid.index(c["nu"]), c["restart"]))
    medians = {}
    for m in METRICS:
        medians[m] = [_median([c[m] for c in cells if c["nu"] == nu and c["status"] == "ok"])
                      for nu in config.nu_grid]
    failed = [c for c in cells if c["status"] != "ok"]
    metadata = {
        "error_convention": config.error_convention,
        "seeds": {"base_seed": config.base_seed,
                  "restart_seeds": [config.base_seed + r for r in range(config.n_restarts)]},
        "n_cells": len(cells),
        "failed_cells": len(failed),
    }
    return SweepReport(config.to_dict(), cells, medians, metadata)


def run_sweep(config: SweepConfig, workers: int | None = 1) -> SweepReport:
    """Train and validate every (nu, restart) cell and aggregate medians per nu.

    ``workers`` > 1 fans cells out to a process pool; ``None`` uses every
    processor.  Failed cells (optimizer errors) are kept in the report but
    excluded from the medians.
    """
    jobs = [(config, i, r) for i in range(len(config.nu_grid)) for r in range(config.n_restarts)]
    workers = os.cpu_count() or 1 if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        cells = [run_cell(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    report = assemble_report(config, cells)
    if report.metadata["failed_cells"]:
        log.warning("%d of %d sweep cells failed and were excluded from medians",
                    report.metadata["failed_cells"], len(cells))
    return report


# Medians closer than this (relative) are ties: models that collapsed to the
# same point differ only by optimizer round-off.
TIE_RTOL = 1e-8


def minimizers(values, rtol: float = TIE_RTOL) -> list[int]:
    """Indices whose value ties the minimum within ``rtol``; None entries are skipped."""
    finite = [v for v in values if v is not None]
    if not finite:
        return []
    best = min(finite)
    limit = best + rtol * abs(best)
    return [i for i, v in enumerate(values) if v is not None and v <= limit]


def select_model(report: SweepReport) -> float:
    """nu with the lowest median missing-data error; ties go to the larger nu."""
    tied = minimizers(report.medians["missing_error"])
    if not tied:
        raise ValueError("report has no successful cells")
    return max(report.nu_grid[i] for i in tied)


@dataclass(frozen=True)
class QuadraticComparison:
    overfit_error: float
    true_curve_error: float

    @property
    def ratio(self) -> float:
        return self.true_curve_error / self.overfit_error


def quadratic_comparison(seed: int, n_train: int = 10, n_test: int = 200, sigma: float = 0.4,
                         layer_sizes=(1, 8, 2), nu: float = 0.0,
                         cg: CgConfig = CgConfig(max_iterations=5000),
                         n_grid: int = 10_000) -> QuadraticComparison:
    """Test-set error of an unregularized network vs the noise-free generating curve.

    Both are scored on the same complete test samples; the network by
    per-sample score optimization, the true curve by a dense grid over the
    generator's t-range.
    """
    tr, _ = generate(GeneratorConfig("quadratic", n_train, sigma, seed=derive_seed(seed, _TRAIN_DATA)))
    te, _ = generate(GeneratorConfig("quadratic", n_test, sigma, seed=derive_seed(seed, _VALID_DATA)))
    model = train(tr, TrainConfig(layer_sizes, nu, cg, init_seed=derive_seed(seed, _INIT)))
    overfit = test_set_error(model, te, seed=derive_seed(seed, _INFER))
    lo, hi = GeneratorConfig("quadratic", 1, sigma).resolved_t_range
    truth = curve_test_error(quadratic_truth(np.linspace(lo, hi, n_grid)), te)
    return QuadraticComparison(overfit, truth)
