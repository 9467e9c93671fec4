import numpy as np
import pytest

from core.harmonium import HarmoniumParams, ModelDims, TruncationSpec
from core.parallel import make_rng
from tools.corpus_io.synthetic import generate_synthetic, two_cluster_spec


@pytest.fixture
def tiny_dims():
    return ModelDims(M=2, K=1, J=2)


@pytest.fixture
def tiny_params(tiny_dims):
    # Small rates and couplings: the x_max=8 support holds all but ~1e-8 of the mass.
    return HarmoniumParams(
        dims=tiny_dims,
        alpha=np.array([-0.7, -1.0]),
        beta=np.array([0.3]),
        sigma=np.array([0.8]),
        W=np.array([[0.15, -0.1], [0.05, 0.12]]),
        U=np.array([[0.1, -0.08]]),
    )


@pytest.fixture
def tiny_trunc():
    return TruncationSpec.uniform(x_max=8, K=1, lo=-6.0, hi=6.0, n=41)


@pytest.fixture
def tiny_batch(tiny_params):
    rng = make_rng(11)
    X = rng.poisson(1.0, (20, tiny_params.dims.M)).clip(0, 8).astype(float)
    Z = rng.normal(0.5, 1.0, (20, tiny_params.dims.K))
    return X, Z


@pytest.fixture
def one_word_params():
    """M=1, K=1, J=1 model for checks that integrate over a single hidden unit."""
    return HarmoniumParams(
        dims=ModelDims(M=1, K=1, J=1),
        alpha=np.array([0.2]),
        beta=np.array([-0.1]),
        sigma=np.array([1.1]),
        W=np.array([[0.4]]),
        U=np.array([[-0.3]]),
    )


@pytest.fixture
def two_cluster_corpus():
    return generate_synthetic(two_cluster_spec(N=120, M=10, K=4, seed=3))
