"""Inverse nonlinear PCA: fit only the generation network, with the latent
scores of the training samples treated as free parameters.

New samples are placed on the learned curve by optimizing their score with
the weights frozen, using only the observed entries.  That single
primitive serves projection (all entries observed) and missing-value
estimation (some entries hidden).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datagen import DataError, MaskedDataset, make_rng
from .network import Layout, LossBreakdown, NetworkParams, ShapeError, forward, loss_and_grad
from .optimizer import CgConfig, LineSearchConfig, minimize, minimize_rows

FORMAT_VERSION = 1

INFER_CG = CgConfig(max_iterations=200, gradient_tolerance=1e-12)


@dataclass(frozen=True)
class TrainConfig:
    layer_sizes: tuple[int, ...]
    nu: float = 0.0
    cg: CgConfig = field(default_factory=CgConfig)
    init_seed: int = 0
    init_scale: float = 1.0
    score_init: str = "random"
    # Penalize the latent scores alongside the weights; see README.
    score_decay: bool = True

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"invalid layer sizes {self.layer_sizes}")
        object.__setattr__(self, "layer_sizes", sizes)
        if not self.nu >= 0:
            raise ValueError("nu must be nonnegative")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")
        if self.score_init not in ("random", "zeros"):
            raise ValueError("score_init must be 'random' or 'zeros'")
        if isinstance(self.cg, dict):
            object.__setattr__(self, "cg", CgConfig(**self.cg))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass(frozen=True)
class InverseModel:
    params: NetworkParams
    scores: np.ndarray
    train_config: TrainConfig
    final_loss: LossBreakdown

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        if scores.ndim != 2 or scores.shape[1] != self.params.latent_dim:
            raise ShapeError(f"scores have shape {scores.shape}")
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    @property
    def data_dim(self) -> int:
        return self.params.data_dim

    def curve(self, z) -> np.ndarray:
        return forward(self.params, z)


def train(data: MaskedDataset, config: TrainConfig) -> InverseModel:
    """Jointly fit weights, biases and training scores by conjugate gradient.

    Weights and biases start iid U(-init_scale, init_scale); scores start at
    0.1 * N(0, 1) (or zero).  Both draws come from ``init_seed``.
    """
    if data.dim != config.layer_sizes[-1]:
        raise ShapeError(f"data dimension {data.dim} != output layer {config.layer_sizes[-1]}")
    n, k = data.n_samples, config.layer_sizes[0]
    rng = make_rng(config.init_seed)
    params = NetworkParams.uniform(config.layer_sizes, rng, config.init_scale)
    if config.score_init == "random":
        scores = 0.1 * rng.standard_normal((n, k))
    else:
        scores = np.zeros((n, k))

    layout = Layout(config.layer_sizes, n)
    target, mask = data.filled(0.0), data.mask.astype(float)
    nu, score_decay = config.nu, config.score_decay

    def objective(flat):
        ws, bs, z = layout.views(flat)
        recon, pen, (dws, dbs, dz) = loss_and_grad(ws, bs, z, target, mask, nu, score_decay)
        grad = np.concatenate([w.ravel() for w in dws] + [b for b in dbs] + [dz.ravel()])
        return recon + pen, grad

    result = minimize(objective, layout.pack(params, scores), config.cg)
    ws, bs, z = layout.views(result.x)
    recon, pen, _ = loss_and_grad(ws, bs, z, target, mask, nu, score_decay, want_grad=False)
    return InverseModel(layout.unpack(result.x), z.copy(), config,
                        LossBreakdown(recon, pen, recon + pen))


def _score_box(model: InverseModel) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = model.scores.min(axis=0), model.scores.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-3)
    return lo - pad, hi + pad


def infer_scores_batch(model: InverseModel, data: MaskedDataset, cg: CgConfig = INFER_CG,
                       n_starts: int = 10, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Best latent score for every row of ``data`` with the weights frozen.

    Each row is fitted from ``n_starts`` starts drawn uniformly over the
    (5%-padded) box of training scores plus one start at the score of the
    nearest training reconstruction, measured on the row's observed entries.
    Returns ``(z, err)`` with ``err`` the mean squared error over observed
    entries.
    """
    if data.dim != model.data_dim:
        raise ShapeError(f"data dimension {data.dim} != model output {model.data_dim}")
    if n_starts < 0:
        raise ValueError("n_starts must be nonnegative")
    n, k = data.n_samples, model.params.latent_dim
    target, mask = data.filled(0.0), data.mask.astype(float)
    n_obs = mask.sum(axis=1)

    recon_train = forward(model.params, model.scores)
    dist = (((target[:, None, :] - recon_train[None, :, :]) ** 2) * mask[:, None, :]).sum(axis=2)
    nearest = model.scores[np.argmin(dist, axis=1)]
    lo, hi = _score_box(model)
    random_starts = make_rng(seed).uniform(lo, hi, size=(n, n_starts, k))
    starts = np.concatenate([nearest[:, None, :], random_starts], axis=1)
    S = n_starts + 1

    tgt = np.repeat(target, S, axis=0)
    msk = np.repeat(mask, S, axis=0)
    scale = np.repeat(2.0 / n_obs, S)[:, None]
    ws, bs = model.params.weights, model.params.biases

    def objective(z):
        acts = [z]
        for l, (w, b) in enumerate(zip(ws, bs)):
            a = acts[-1] @ w.T + b
            acts.append(a if l == len(ws) - 1 else np.tanh(a))
        resid = (acts[-1] - tgt) * msk
        values = np.sum(resid * resid, axis=1) * scale[:, 0] / 2
        delta = scale * resid
        for l in range(len(ws) - 1, -1, -1):
            back = delta @ ws[l]
            if l > 0:
                delta = back * (1.0 - acts[l] ** 2)
        return values, back

    res = minimize_rows(objective, starts.reshape(n * S, k), cg)
    values = res.values.reshape(n, S)
    best = np.argmin(values, axis=1)
    z = res.x.reshape(n, S, k)[np.arange(n), best]
    return z, values[np.arange(n), best]


def _single(values, mask) -> MaskedDataset:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ShapeError("expected a single sample vector")
    mask = np.ones(values.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DataError("sample has no observed entries")
    return MaskedDataset(values[None, :], mask[None, :])


def infer_scores(model: InverseModel, sample, mask=None, cg: CgConfig = INFER_CG,
                 n_starts: int = 10, seed: int = 0) -> tuple[np.ndarray, float]:
    z, err = infer_scores_batch(model, _single(sample, mask), cg, n_starts, seed)
    return z[0], float(err[0])


def estimate_missing_batch(model: InverseModel, data: MaskedDataset, cg: CgConfig = INFER_CG,
                           n_starts: int = 10, seed: int = 0) -> np.ndarray:
    """Fill every missing entry with the model's prediction; observed entries pass through."""
    z, _ = infer_scores_batch(model, data, cg, n_starts, seed)
    return np.where(data.mask, data.values, forward(model.params, z))


def estimate_missing(model: InverseModel, sample, mask, cg: CgConfig = INFER_CG,
                     n_starts: int = 10, seed: int = 0) -> np.ndarray:
    data = _single(sample, mask)
    if data.fully_observed:
        raise DataError("nothing to estimate")
    return estimate_missing_batch(model, data, cg, n_starts, seed)[0]


def project_batch(model: InverseModel, data: MaskedDataset, cg: CgConfig = INFER_CG,
                  n_starts: int = 10, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Closest curve point for each fully observed row and its per-entry squared distance."""
    if not data.fully_observed:
        raise DataError("projection needs fully observed samples")
    z, err = infer_scores_batch(model, data, cg, n_starts, seed)
    return forward(model.params, z), err


def project(model: InverseModel, sample, cg: CgConfig = INFER_CG, n_starts: int = 10,
            seed: int = 0) -> tuple[np.ndarray, float]:
    xhat, err = project_batch(model, _single(sample, None), cg, n_starts, seed)
    return xhat[0], float(err[0])


def model_to_dict(model: InverseModel, extra: dict | None = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(model.params.layer_sizes),
        "flat_order": "weights row-major layer by layer, then biases layer by layer",
        "params": model.params.flat().tolist(),
        "scores": model.scores.tolist(),
        "train_config": model.train_config.to_dict(),
        "final_loss": asdict(model.final_loss),
    }
    if extra:
        doc.update(extra)
    return doc


def model_from_dict(doc: dict) -> InverseModel:
    try:
        if doc["format_version"] != FORMAT_VERSION:
            raise DataError(f"unsupported checkpoint version {doc['format_version']}")
        sizes = tuple(doc["layer_sizes"])
        params = NetworkParams.from_flat(sizes, doc["params"])
        scores = np.array(doc["scores"], dtype=float).reshape(-1, sizes[0])
        cfg = dict(doc["train_config"])
        cfg["cg"] = CgConfig(**{**cfg["cg"], "line_search": LineSearchConfig(**cfg["cg"]["line_search"])})
        return InverseModel(params, scores, TrainConfig(**cfg), LossBreakdown(**doc["final_loss"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"corrupt checkpoint: {exc!r}") from exc


def save_model(model: InverseModel, path, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, extra), indent=1) + "\n")


def load_model(path) -> tuple[InverseModel, dict]:
    """Returns the model and the raw document (for extra fields such as normalization)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read checkpoint ({exc})") from exc
    return model_from_dict(doc), doc
