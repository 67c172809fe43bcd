"""Generation network: latent scores -> data space.

Hidden layers use tanh and the output layer is affine.  Weight matrices are
stored fan-out x fan-in, so layer ``l`` computes ``a @ W[l].T + b[l]``.

Flat parameter order (used by the optimizer and by checkpoints): every
weight matrix layer by layer in row-major order, then every bias vector
layer by layer, then (when present) the latent scores row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import MaskedDataset


class ShapeError(ValueError):
    pass


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class NetworkParams:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ShapeError(f"invalid layer sizes {self.layer_sizes}")
        weights = tuple(_readonly(w) for w in self.weights)
        biases = tuple(_readonly(b) for b in self.biases)
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ShapeError("need one weight matrix and one bias vector per layer")
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (sizes[l + 1], sizes[l]):
                raise ShapeError(f"weights[{l}] has shape {w.shape}, "
                                 f"expected {(sizes[l + 1], sizes[l])}")
            if b.shape != (sizes[l + 1],):
                raise ShapeError(f"biases[{l}] has shape {b.shape}, expected {(sizes[l + 1],)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"non-finite coefficients in layer {l}")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @classmethod
    def zeros(cls, layer_sizes) -> "NetworkParams":
        sizes = tuple(layer_sizes)
        return cls(sizes,
                   tuple(np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])),
                   tuple(np.zeros(o) for o in sizes[1:]))

    @classmethod
    def uniform(cls, layer_sizes, rng: np.random.Generator, scale: float) -> "NetworkParams":
        """Weights and biases drawn iid from U(-scale, scale), weights first."""
        layout = Layout(tuple(layer_sizes))
        return layout.unpack(rng.uniform(-scale, scale, size=layout.n_params))

    @classmethod
    def from_flat(cls, layer_sizes, flat) -> "NetworkParams":
        return Layout(tuple(layer_sizes)).unpack(np.asarray(flat, dtype=float))

    @property
    def latent_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def data_dim(self) -> int:
        return self.layer_sizes[-1]

    def flat(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights]
                              + [b.ravel() for b in self.biases])

    def sum_sq_weights(self) -> float:
        return float(sum(np.sum(w * w) for w in self.weights))


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    decay_penalty: float
    total: float


class Layout:
    """Slices a flat vector into weight, bias and score views."""

    def __init__(self, layer_sizes: tuple[int, ...], n_samples: int = 0):
        self.layer_sizes = layer_sizes
        self.n_samples = n_samples
        self.w_shapes = [(o, i) for i, o in zip(layer_sizes[:-1], layer_sizes[1:])]
        self.w_slices, self.b_slices = [], []
        pos = 0
        for o, i in self.w_shapes:
            self.w_slices.append(slice(pos, pos + o * i))
            pos += o * i
        self.n_weights = pos
        for o, _ in self.w_shapes:
            self.b_slices.append(slice(pos, pos + o))
            pos += o
        self.n_params = pos
        self.z_slice = slice(pos, pos + n_samples * layer_sizes[0])
        self.size = self.z_slice.stop

    def views(self, flat: np.ndarray):
        ws = [flat[s].reshape(shape) for s, shape in zip(self.w_slices, self.w_shapes)]
        bs = [flat[s] for s in self.b_slices]
        z = flat[self.z_slice].reshape(self.n_samples, self.layer_sizes[0])
        return ws, bs, z

    def unpack(self, flat: np.ndarray) -> NetworkParams:
        ws, bs, _ = self.views(flat)
        return NetworkParams(self.layer_sizes, tuple(ws), tuple(bs))

    def pack(self, params: NetworkParams, scores=None) -> np.ndarray:
        parts = [params.flat()]
        if scores is not None:
            parts.append(np.asarray(scores, dtype=float).ravel())
        return np.concatenate(parts)


def _forward(weights, biases, z: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer, input included."""
    acts = [z]
    last = len(weights) - 1
    for l, (w, b) in enumerate(zip(weights, biases)):
        a = acts[-1] @ w.T + b
        acts.append(a if l == last else np.tanh(a))
    return acts


def forward(params: NetworkParams, z) -> np.ndarray:
    """Map latent vector(s) to data space.

    Accepts a single latent vector of length k or an ``(n, k)`` matrix.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    batch = z[None, :] if single else z
    if batch.ndim != 2 or batch.shape[1] != params.latent_dim:
        raise ShapeError(f"latent input has shape {z.shape}, "
                         f"expected trailing dimension {params.latent_dim}")
    out = _forward(params.weights, params.biases, batch)[-1]
    return out[0] if single else out


def loss_and_grad(weights, biases, z, target, mask, nu: float, score_decay: bool = False,
                  want_grad: bool = True):
    """Shared kernel for loss and gradient.

    ``target`` must already have missing entries zeroed and ``mask`` is a
    float 0/1 array.  Returns ``(reconstruction, penalty, grads)`` with
    ``grads = (dW list, db list, dz)`` or None.
    """
    n_obs = mask.sum()
    acts = _forward(weights, biases, z)
    resid = (acts[-1] - target) * mask
    recon = float(np.sum(resid * resid) / n_obs)
    penalty = sum(float(np.sum(w * w)) for w in weights)
    if score_decay:
        penalty += float(np.sum(z * z))
    penalty *= nu
    if not want_grad:
        return recon, penalty, None

    n_layers = len(weights)
    dws, dbs = [None] * n_layers, [None] * n_layers
    delta = (2.0 / n_obs) * resid
    for l in range(n_layers - 1, -1, -1):
        dws[l] = delta.T @ acts[l] + 2.0 * nu * weights[l]
        dbs[l] = delta.sum(axis=0)
        back = delta @ weights[l]
        if l > 0:
            delta = back * (1.0 - acts[l] ** 2)
    dz = back + 2.0 * nu * z if score_decay else back
    return recon, penalty, (dws, dbs, dz)


def _check(params: NetworkParams, scores, data: MaskedDataset, nu: float):
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape != (data.n_samples, params.latent_dim):
        raise ShapeError(f"scores have shape {scores.shape}, "
                         f"expected {(data.n_samples, params.latent_dim)}")
    if data.dim != params.data_dim:
        raise ShapeError(f"data dimension {data.dim} != network output {params.data_dim}")
    if not data.mask.any():
        raise ValueError("no observed entries")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    return scores, data.filled(0.0), data.mask.astype(float)


def loss(params: NetworkParams, scores, data: MaskedDataset, nu: float,
         score_decay: bool = False) -> LossBreakdown:
    """Masked mean squared reconstruction error plus weight decay.

    The reconstruction term averages over observed entries only.  The
    penalty is ``nu`` times the sum of squared weight-matrix entries; biases
    are never penalized.  With ``score_decay`` the latent scores are added
    to the penalized sum.
    """
    scores, target, mask = _check(params, scores, data, nu)
    recon, penalty, _ = loss_and_grad(params.weights, params.biases, scores, target, mask,
                                      nu, score_decay, want_grad=False)
    return LossBreakdown(recon, penalty, recon + penalty)


def gradient(params: NetworkParams, scores, data: MaskedDataset, nu: float,
             score_decay: bool = False) -> tuple[NetworkParams, np.ndarray]:
    """Exact gradient of ``loss(...).total`` w.r.t. weights, biases and scores."""
    scores, target, mask = _check(params, scores, data, nu)
    _, _, (dws, dbs, dz) = loss_and_grad(params.weights, params.biases, scores, target, mask,
                                         nu, score_decay)
    return NetworkParams(params.layer_sizes, tuple(dws), tuple(dbs)), dz
