import hypothesis
import numpy as np
import pytest

from nlpca_validation.datagen import MaskedDataset
from nlpca_validation.network import NetworkParams, loss

hypothesis.settings.register_profile("default", deadline=None, max_examples=40)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=5)
hypothesis.settings.load_profile("default")


def random_instance(rng, sizes, n, missing=0.3, scale=1.0):
    params = NetworkParams.uniform(sizes, rng, scale)
    z = rng.standard_normal((n, sizes[0]))
    x = rng.standard_normal((n, sizes[-1]))
    mask = rng.random((n, sizes[-1])) >= missing
    mask[np.arange(n), rng.integers(0, sizes[-1], n)] = True
    return params, z, MaskedDataset(x, mask)


def fd_gradient(params, z, data, nu, score_decay=False, h=1e-5):
    """Central differences of the total loss over every weight, bias and score."""
    sizes = params.layer_sizes
    theta = np.concatenate([params.flat(), z.ravel()])
    n_net = params.flat().size

    def f(v):
        p = NetworkParams.from_flat(sizes, v[:n_net])
        return loss(p, v[n_net:].reshape(z.shape), data, nu, score_decay).total

    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return grad[:n_net], grad[n_net:].reshape(z.shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
