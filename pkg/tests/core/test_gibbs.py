import numpy as np
import pytest

import config
from core import gibbs
from core.enumeration import word_state_marginal
from core.errors import ShapeError
from core.gibbs import GibbsConfig
from core.harmonium import HarmoniumParams, ModelDims, Observation, hidden_conditional_mean
from core.parallel import make_rng
from tools.trainer.oracle import canonical_truncation, exact_gradient, random_tiny_params


@pytest.fixture
def decoupled():
    return HarmoniumParams.zeros(ModelDims(M=2, K=1, J=2)).replace(
        alpha=np.array([np.log(2.0), -0.5]), beta=np.array([0.4]), sigma=np.array([1.5])
    )


# =====================================================
# Conditional samplers
# =====================================================


def test_sample_hidden_zero_couplings_is_standard_normal(decoupled):
    n = 100_000
    H = gibbs.sample_hidden_batch(decoupled, np.ones((n, 2)), np.ones((n, 1)), make_rng(1))
    assert np.all(np.abs(H.mean(axis=0)) < 0.02)
    assert np.allclose(H.std(axis=0), 1.0, atol=0.02)


def test_sample_hidden_mean_matches_conditional(tiny_params):
    n = 50_000
    obs = Observation(x=[3, 1], z=[0.5])
    X = np.tile(obs.x.astype(float), (n, 1))
    Z = np.tile(obs.z, (n, 1))
    H = gibbs.sample_hidden_batch(tiny_params, X, Z, make_rng(2))
    gamma = hidden_conditional_mean(tiny_params, obs)
    assert np.all(np.abs(H.mean(axis=0) - gamma) < 4 / np.sqrt(n))


def test_sample_hidden_is_deterministic(tiny_params):
    obs = Observation(x=[1, 2], z=[0.1])
    a = gibbs.sample_hidden(tiny_params, obs, make_rng(9))
    b = gibbs.sample_hidden(tiny_params, obs, make_rng(9))
    assert np.array_equal(a, b)


def test_sample_words_degenerate_rate_is_zero():
    params = HarmoniumParams.zeros(ModelDims(M=3, K=0, J=1)).replace(alpha=np.full(3, -30.0))
    X = gibbs.sample_words(params, np.zeros((1000, 1)), make_rng(3))
    assert not X.any()


def test_sample_words_mean_and_variance_match_rate(decoupled):
    n = 100_000
    X = gibbs.sample_words(decoupled, np.zeros((n, 2)), make_rng(4))
    first = X[:, 0]
    assert abs(first.mean() - 2.0) < 4 * np.sqrt(2.0 / n)
    assert first.var() == pytest.approx(first.mean(), rel=0.05)


def test_sample_words_clamps_and_warns(caplog):
    params = HarmoniumParams.zeros(ModelDims(M=2, K=0, J=1)).replace(
        alpha=np.full(2, np.log(50.0))
    )
    X = gibbs.sample_words(params, np.zeros((20, 1)), make_rng(5), x_max=10)
    assert X.max() == 10
    assert "clamped at x_max=10" in caplog.text


def test_sample_image_degenerate_sigma_concentrates():
    params = HarmoniumParams.zeros(ModelDims(M=1, K=2, J=1)).replace(sigma=np.full(2, 1e-3))
    Z = gibbs.sample_image(params, np.zeros((1000, 1)), make_rng(6))
    assert np.max(np.abs(Z)) < 0.01


def test_sample_image_variance_matches_sigma(decoupled):
    n = 100_000
    Z = gibbs.sample_image(decoupled, np.zeros((n, 2)), make_rng(7))
    assert Z.mean() == pytest.approx(1.5**2 * 0.4, abs=4 * 1.5 / np.sqrt(n))
    assert Z.var() == pytest.approx(1.5**2, rel=0.05)


# =====================================================
# Sweeps and chains
# =====================================================


def test_gibbs_config_rejects_zero_steps():
    with pytest.raises(ValueError):
        GibbsConfig(steps=0)


def test_one_sweep_without_coupling_ignores_the_start(decoupled):
    cfg = GibbsConfig(steps=1, x_max=100)
    a = gibbs.gibbs_sweep(decoupled, Observation(x=[0, 0], z=[0.0]), cfg, make_rng(8))
    b = gibbs.gibbs_sweep(decoupled, Observation(x=[7, 3], z=[-4.0]), cfg, make_rng(8))
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.z, b.z)


@pytest.mark.slow
def test_long_chains_match_enumerated_word_marginal(tiny_params, tiny_trunc):
    X, _ = gibbs.sample_model(tiny_params, n=20_000, steps=50, seed=3, x_max=8)
    states, probs = word_state_marginal(tiny_params, tiny_trunc)
    codes = (X[:, 0] * 9 + X[:, 1]).astype(int)
    empirical = np.bincount(codes, minlength=81) / X.shape[0]
    expected = np.zeros(81)
    expected[(states[:, 0] * 9 + states[:, 1]).astype(int)] = probs
    assert 0.5 * np.abs(empirical - expected).sum() < 0.02


# =====================================================
# Contrastive divergence
# =====================================================


def test_cd_rejects_empty_batch(tiny_params):
    with pytest.raises(ShapeError):
        gibbs.cd_gradient(tiny_params, (np.zeros((0, 2)), np.zeros((0, 1))))


def test_cd_is_bit_identical_for_same_seed(tiny_params, tiny_batch):
    a = gibbs.cd_gradient(tiny_params, tiny_batch, seed=4)
    b = gibbs.cd_gradient(tiny_params, tiny_batch, seed=4)
    assert np.array_equal(a.flatten(), b.flatten())


def test_cd_does_not_depend_on_worker_count(tiny_params, monkeypatch):
    monkeypatch.setattr(config, "CHUNK_SIZE", 64)
    rng = make_rng(12)
    batch = (rng.poisson(1.0, (300, 2)).astype(float), rng.normal(size=(300, 1)))
    serial = gibbs.cd_gradient(tiny_params, batch, seed=1, workers=1)
    threaded = gibbs.cd_gradient(tiny_params, batch, seed=1, workers=4)
    assert np.array_equal(serial.flatten(), threaded.flatten())


def test_cd_decoupled_alpha_rule_has_closed_form(monkeypatch):
    monkeypatch.setattr(config, "CHUNK_SIZE", 4096)
    alpha = np.array([0.3, -0.6])
    params = HarmoniumParams.zeros(ModelDims(M=2, K=1, J=1)).replace(alpha=alpha)
    n = 20_000
    batch = (np.zeros((n, 2)), np.zeros((n, 1)))
    grads = gibbs.cd_gradient(params, batch, seed=2)
    assert np.all(np.abs(grads.d_alpha + np.exp(alpha)) < 4 * np.sqrt(np.exp(alpha) / n))
    assert np.array_equal(grads.d_W, np.zeros((2, 1)))


def test_cd_reports_clamped_draws(caplog):
    params = HarmoniumParams.zeros(ModelDims(M=2, K=0, J=1)).replace(
        alpha=np.full(2, np.log(50.0))
    )
    batch = (np.zeros((10, 2)), np.zeros((10, 0)))
    _, diagnostics = gibbs.cd_estimate(params, batch, GibbsConfig(steps=1, x_max=10), seed=0)
    assert diagnostics.draws == 20
    assert diagnostics.clamped > 0
    assert "clamped" in caplog.text


@pytest.mark.slow
def test_cd_on_model_samples_is_near_zero(tiny_params):
    cfg = GibbsConfig(steps=1, x_max=8)
    draws = []
    for r in range(50):
        batch = gibbs.sample_model(tiny_params, n=2_000, steps=50, seed=100 + r, x_max=8)
        grads, _ = gibbs.cd_estimate(tiny_params, batch, cfg, seed=5, stream=(r,))
        draws.append(grads.flatten())
    draws = np.array(draws)
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
    assert draws.shape == (50, 10)
    assert np.all(np.abs(mean) <= 3 * se + 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("draw", [None, 0, 1, 2])
def test_long_cd_agrees_with_exact_gradient(tiny_params, draw):
    params = tiny_params if draw is None else random_tiny_params(make_rng(40 + draw))
    shifted = params.replace(alpha=params.alpha - 0.5, beta=params.beta + 0.5, W=params.W * 2)
    batch = gibbs.sample_model(shifted, n=10_000, steps=50, seed=31, x_max=8)
    exact = exact_gradient(params, batch, canonical_truncation())
    cd = gibbs.cd_gradient(params, batch, GibbsConfig(steps=50, x_max=8), seed=6)
    assert cd.cosine(exact) > 0.95
