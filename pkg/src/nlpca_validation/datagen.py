"""Synthetic data generators, masking utilities and CSV import/export.

All randomness goes through ``numpy.random.Generator(PCG64(seed))`` so a
given seed produces the same bit-stream on every platform.  Generators draw
the latent factor ``t`` first and the noise second.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FAMILIES = ("helix", "quadratic", "gauss2d")

DEFAULT_T_RANGE = {"helix": (-0.8, 0.8), "quadratic": (-1.0, 1.0)}

# Fixed coefficient of the quadratic family: x2 = QUADRATIC_A * x1**2.
QUADRATIC_A = 1.0


class DataError(ValueError):
    """Malformed or inconsistent data (bad CSV, bad mask, empty rows)."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class MaskedDataset:
    """An ``n x d`` data matrix with a per-entry observed mask.

    ``mask[i, j]`` is True when entry ``(i, j)`` is observed.  Values at
    missing positions are ignored everywhere (they may be NaN).
    ``ground_truth`` keeps the complete matrix when the missing entries were
    removed artificially, so a validator can score the estimates.
    """

    values: np.ndarray
    mask: np.ndarray
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"data must be 2-D, got shape {values.shape}")
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != values.shape:
            raise DataError(f"mask shape {mask.shape} != data shape {values.shape}")
        if not np.all(np.isfinite(values[mask])):
            raise DataError("observed entries must be finite")
        empty = np.flatnonzero(~mask.any(axis=1))
        if empty.size:
            raise DataError(f"row {int(empty[0])} has no observed entries")
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        if self.ground_truth is not None:
            truth = np.array(self.ground_truth, dtype=float)
            if truth.shape != values.shape:
                raise DataError(
                    f"ground truth shape {truth.shape} != data shape {values.shape}")
            truth.flags.writeable = False
            object.__setattr__(self, "ground_truth", truth)

    @classmethod
    def complete(cls, values) -> "MaskedDataset":
        values = np.asarray(values, dtype=float)
        return cls(values, np.ones(values.shape, dtype=bool))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def fully_observed(self) -> bool:
        return bool(self.mask.all())

    def filled(self, fill: float = 0.0) -> np.ndarray:
        """Values with missing entries replaced by ``fill``."""
        return np.where(self.mask, self.values, fill)

    def subset(self, rows) -> "MaskedDataset":
        truth = None if self.ground_truth is None else self.ground_truth[rows]
        return MaskedDataset(self.values[rows], self.mask[rows], truth)


@dataclass(frozen=True)
class GeneratorConfig:
    family: str
    n_samples: int
    noise_sigma: float
    t_range: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.t_range is not None:
            lo, hi = self.t_range
            if not lo < hi:
                raise ValueError(f"empty t_range {self.t_range}")
            object.__setattr__(self, "t_range", (float(lo), float(hi)))

    @property
    def resolved_t_range(self) -> tuple[float, float] | None:
        if self.t_range is not None:
            return self.t_range
        return DEFAULT_T_RANGE.get(self.family)


def helix_curve(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([np.sin(np.pi * t), np.cos(np.pi * t), t], axis=-1)


def quadratic_truth(t_grid) -> np.ndarray:
    """Points ``(t, QUADRATIC_A * t**2)`` of the noise-free quadratic; vertex at t = 0."""
    t = np.asarray(t_grid, dtype=float)
    return np.stack([t, QUADRATIC_A * t**2], axis=-1)


def generate(config: GeneratorConfig) -> tuple[MaskedDataset, np.ndarray | None]:
    """Draw a fully observed dataset; also returns the generating ``t`` (None for gauss2d)."""
    rng = make_rng(config.seed)
    n, sigma = config.n_samples, config.noise_sigma
    if config.family == "gauss2d":
        x = sigma * rng.standard_normal((n, 2))
        return MaskedDataset.complete(x), None
    lo, hi = config.resolved_t_range
    t = rng.uniform(lo, hi, size=n)
    clean = helix_curve(t) if config.family == "helix" else quadratic_truth(t)
    x = clean + sigma * rng.standard_normal(clean.shape)
    return MaskedDataset.complete(x), t


def mask_one_of_d(data: MaskedDataset, seed: int) -> MaskedDataset:
    """Hide exactly one uniformly chosen coordinate per row.

    Values are left untouched; the removed entries stay available through
    ``ground_truth``.
    """
    n, d = data.values.shape
    if d < 2:
        raise DataError("masking one coordinate per row needs d >= 2")
    if not data.fully_observed:
        raise DataError("mask_one_of_d expects a fully observed dataset")
    drop = make_rng(seed).integers(0, d, size=n)
    mask = np.ones((n, d), dtype=bool)
    mask[np.arange(n), drop] = False
    truth = data.values if data.ground_truth is None else data.ground_truth
    return MaskedDataset(data.values, mask, truth)


def mask_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".mask" + (path.suffix or ".csv"))


def write_csv(data: MaskedDataset, path, mask_path=None) -> tuple[Path, Path]:
    """Write values (NaN at missing cells) plus a 1/0 mask sidecar.

    Floats are written with ``repr`` so a reload is exact and reruns are
    byte-identical.
    """
    path = Path(path)
    mask_path = mask_path_for(path) if mask_path is None else Path(mask_path)
    header = [f"x{j + 1}" for j in range(data.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, obs in zip(data.values, data.mask):
            w.writerow([repr(float(v)) if o else "nan" for v, o in zip(row, obs)])
    with open(mask_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for obs in data.mask:
            w.writerow(["1" if o else "0" for o in obs])
    return path, mask_path


def _read_table(path: Path, parse) -> tuple[list[str], list[list]]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}: empty file, expected a header row")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(raw)}")
            try:
                rows.append([parse(c) for c in raw])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, rows


def _parse_float(cell: str) -> float:
    cell = cell.strip()
    try:
        return float(cell)
    except ValueError:
        raise ValueError(f"non-numeric cell {cell!r}") from None


def _parse_flag(cell: str) -> bool:
    cell = cell.strip()
    if cell not in ("0", "1"):
        raise ValueError(f"mask cell must be 0 or 1, got {cell!r}")
    return cell == "1"


def read_csv(path, mask_path=None) -> MaskedDataset:
    """Load a dataset written by :func:`write_csv` (or any headered numeric CSV).

    NaN cells are missing.  The mask sidecar is used when given explicitly or
    when ``<stem>.mask.csv`` exists next to the data file.
    """
    path = Path(path)
    _, rows = _read_table(path, _parse_float)
    values = np.array(rows, dtype=float)
    if not np.all(np.isfinite(values) | np.isnan(values)):
        raise DataError(f"{path}: infinite values are not allowed")
    mask = ~np.isnan(values)
    if mask_path is None and mask_path_for(path).exists():
        mask_path = mask_path_for(path)
    if mask_path is not None:
        _, flags = _read_table(Path(mask_path), _parse_flag)
        side = np.array(flags, dtype=bool)
        if side.shape != values.shape:
            raise DataError(f"{mask_path}: mask shape {side.shape} != data shape {values.shape}")
        mask &= side
    empty = np.flatnonzero(~mask.any(axis=1))
    if empty.size:
        raise DataError(f"{path}:{int(empty[0]) + 2}: row has no observed entries")
    return MaskedDataset(values, mask)


def zscore(data: MaskedDataset) -> tuple[MaskedDataset, np.ndarray, np.ndarray]:
    """Standardize each column over its observed entries."""
    mean = np.array([data.values[data.mask[:, j], j].mean() for j in range(data.dim)])
    std = np.array([data.values[data.mask[:, j], j].std() for j in range(data.dim)])
    std = np.where(std > 0, std, 1.0)
    scaled = np.where(data.mask, (data.values - mean) / std, np.nan)
    truth = None if data.ground_truth is None else (data.ground_truth - mean) / std
    return MaskedDataset(scaled, data.mask, truth), mean, std
