"""Blocked Gibbs sampling over the bipartite field and contrastive divergence."""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

import config
from core import logger as log
from core.errors import ShapeError
from core.gradients import (
    Gradients,
    Moments,
    empirical_moments,
    gradient_from_moments,
    moment_sums,
)
from core.harmonium import (
    HarmoniumParams,
    Observation,
    as_matrices,
    hidden_conditional_mean,
    hidden_conditional_means,
    image_conditional,
    word_rates,
)
from core.parallel import chunk_map, make_rng

log = log.get_logger()


@dataclass(frozen=True)
class GibbsConfig:
    steps: int = field(default_factory=lambda: config.GIBBS_STEPS)
    x_max: int = field(default_factory=lambda: config.DEFAULT_X_MAX)
    rng_seed: int = field(default_factory=lambda: config.GIBBS_SEED)

    def __post_init__(self):
        if int(self.steps) < 1:
            raise ValueError(f"Gibbs steps must be >= 1, got {self.steps}")
        if int(self.x_max) < 1:
            raise ValueError(f"x_max must be >= 1, got {self.x_max}")


@dataclass(frozen=True, eq=False)
class ChainState:
    X: np.ndarray
    Z: np.ndarray
    H: np.ndarray  # hidden draw that produced (X, Z)
    clamped: int  # word draws cut back to x_max


# =====================================================
# Conditional samplers
# =====================================================


def sample_hidden_batch(params: HarmoniumParams, X, Z, rng: np.random.Generator) -> np.ndarray:
    gamma = hidden_conditional_means(params, X, Z)
    return gamma + rng.standard_normal(gamma.shape)


def sample_words_batch(
    params: HarmoniumParams, H: np.ndarray, rng: np.random.Generator, x_max: int
) -> Tuple[np.ndarray, int]:
    rates = word_rates(params, H)
    X = rng.poisson(rates)
    over = X > x_max
    clamped = int(over.sum())
    if clamped:
        X = np.minimum(X, x_max)
    return X.astype(float), clamped


def sample_image_batch(params: HarmoniumParams, H: np.ndarray, rng: np.random.Generator):
    mean, variance = image_conditional(params, H)
    return mean + np.sqrt(variance) * rng.standard_normal(mean.shape)


def sample_hidden(params: HarmoniumParams, obs: Observation, rng: np.random.Generator):
    gamma = hidden_conditional_mean(params, obs)
    return gamma + rng.standard_normal(gamma.shape)


def sample_words(
    params: HarmoniumParams, h, rng: np.random.Generator, x_max: Optional[int] = None
) -> np.ndarray:
    x_max = config.DEFAULT_X_MAX if x_max is None else x_max
    X, clamped = sample_words_batch(params, np.asarray(h, dtype=float), rng, x_max)
    if clamped:
        log.warning(f"[sample_words] {clamped} draw(s) clamped at x_max={x_max}")
    return X.astype(np.int64)


def sample_image(params: HarmoniumParams, h, rng: np.random.Generator) -> np.ndarray:
    return sample_image_batch(params, np.asarray(h, dtype=float), rng)


# =====================================================
# Chains
# =====================================================


def gibbs_chain(
    params: HarmoniumParams,
    X: np.ndarray,
    Z: np.ndarray,
    steps: int,
    x_max: int,
    rng: np.random.Generator,
) -> ChainState:
    """Run `steps` sweeps (h from inputs, then words and image from h) for every row."""
    clamped = 0
    H = None
    for _ in range(steps):
        H = sample_hidden_batch(params, X, Z, rng)
        X, c = sample_words_batch(params, H, rng, x_max)
        Z = sample_image_batch(params, H, rng)
        clamped += c
    return ChainState(X=X, Z=Z, H=H, clamped=clamped)


def gibbs_sweep(
    params: HarmoniumParams,
    obs_in: Observation,
    gibbs: GibbsConfig,
    rng: np.random.Generator,
) -> Observation:
    X, Z = as_matrices(params, [obs_in])
    state = gibbs_chain(params, X, Z, gibbs.steps, gibbs.x_max, rng)
    if state.clamped:
        log.debug(f"[gibbs_sweep] {state.clamped} word draw(s) clamped")
    return Observation(x=state.X[0].astype(np.int64), z=state.Z[0])


def sample_model(
    params: HarmoniumParams,
    n: int,
    steps: int,
    seed: int,
    x_max: Optional[int] = None,
    start: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """n independent chains run for `steps` sweeps from zeros (or `start`)."""
    x_max = config.DEFAULT_X_MAX if x_max is None else x_max
    if start is None:
        X0, Z0 = np.zeros((n, params.dims.M)), np.zeros((n, params.dims.K))
    else:
        X0, Z0 = as_matrices(params, start)

    def run(lo, hi):
        state = gibbs_chain(params, X0[lo:hi], Z0[lo:hi], steps, x_max, make_rng(seed, lo))
        return state.X, state.Z

    parts = chunk_map(run, n)
    X = np.vstack([p[0] for p in parts]) if parts else X0
    Z = np.vstack([p[1] for p in parts]) if parts else Z0
    return X, Z


# =====================================================
# Contrastive divergence
# =====================================================


@dataclass(frozen=True)
class CdDiagnostics:
    draws: int
    clamped: int

    @property
    def clamp_fraction(self) -> float:
        return self.clamped / self.draws if self.draws else 0.0


def cd_estimate(
    params: HarmoniumParams,
    batch,
    gibbs: Optional[GibbsConfig] = None,
    seed: Optional[int] = None,
    stream: Sequence[int] = (),
    workers: Optional[int] = None,
) -> Tuple[Gradients, CdDiagnostics]:
    """CD-k gradient with reconstructions started at the data.

    Each chunk of observations draws from its own stream keyed by
    (seed, *stream, chunk start), and chunk sums are reduced in order, so the
    result does not depend on the number of workers.
    """
    gibbs = gibbs or GibbsConfig()
    seed = gibbs.rng_seed if seed is None else seed
    X, Z = as_matrices(params, batch)
    n = X.shape[0]
    if n == 0:
        raise ShapeError("cd_gradient needs a non-empty batch")

    def reconstruct(lo, hi):
        rng = make_rng(seed, *stream, lo)
        state = gibbs_chain(params, X[lo:hi], Z[lo:hi], gibbs.steps, gibbs.x_max, rng)
        return moment_sums(params, state.X, state.Z), state.clamped

    parts = chunk_map(reconstruct, n, workers=workers)
    total: Moments = parts[0][0]
    for sums, _ in parts[1:]:
        total = total + sums
    clamped = sum(c for _, c in parts)
    diagnostics = CdDiagnostics(draws=n * params.dims.M * gibbs.steps, clamped=clamped)
    if clamped:
        log.warning(
            f"[cd_gradient] {clamped} of {diagnostics.draws} word draws clamped at "
            f"x_max={gibbs.x_max}"
        )
    data = empirical_moments(params, (X, Z))
    grads = gradient_from_moments(params, data, total.scaled(1.0 / n))
    return grads, diagnostics


def cd_gradient(
    params: HarmoniumParams,
    batch,
    gibbs: Optional[GibbsConfig] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> Gradients:
    return cd_estimate(params, batch, gibbs, seed=seed, workers=workers)[0]
