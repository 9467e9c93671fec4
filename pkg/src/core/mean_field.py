"""Generalized mean field for the dual-wing harmonium.

q(x, z, h) = prod_i Poisson(x_i | nu_i) prod_k Normal(z_k | mu_k, sigma_k^2)
             prod_j Normal(h_j | gamma_j, 1)

Fixed point:
    gamma_j = sum_i W_ij nu_i + sum_k U_kj mu_k
    mu_k    = sigma_k^2 (beta_k + sum_j U_kj gamma_j)
    nu_i    = exp(alpha_i + sum_j W_ij gamma_j)

Blocks are updated in the order gamma, mu, nu with damping
new = (1 - d) * update + d * old. Clamped blocks are held at observed values.
"""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

import config
from core import logger as log
from core.errors import DivergenceError, ShapeError
from core.gradients import Gradients, Moments, empirical_moments, gradient_from_moments
from core.harmonium import HarmoniumParams, word_rates

log = log.get_logger()


@dataclass(frozen=True, eq=False)
class GmfState:
    nu: np.ndarray  # Poisson means, length M
    mu: np.ndarray  # Gaussian means, length K
    gamma: np.ndarray  # hidden means, length J


@dataclass(frozen=True)
class GmfConfig:
    tol: float = field(default_factory=lambda: config.GMF_TOL)
    max_iter: int = field(default_factory=lambda: config.GMF_MAX_ITER)
    damping: float = field(default_factory=lambda: config.GMF_DAMPING)
    divergence_window: int = field(default_factory=lambda: config.GMF_DIVERGENCE_WINDOW)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")


@dataclass(frozen=True, eq=False)
class Clamp:
    """Observed blocks held fixed during the solve."""

    x: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None


class GmfResult(NamedTuple):
    state: GmfState
    iterations: int
    residual: float
    converged: bool


def _check_clamp(params: HarmoniumParams, clamp: Optional[Clamp]) -> Clamp:
    clamp = clamp or Clamp()
    x = None if clamp.x is None else np.asarray(clamp.x, dtype=float)
    z = None if clamp.z is None else np.asarray(clamp.z, dtype=float)
    if x is not None and x.shape != (params.dims.M,):
        raise ShapeError(f"Clamped x has shape {x.shape}, expected ({params.dims.M},)")
    if z is not None and z.shape != (params.dims.K,):
        raise ShapeError(f"Clamped z has shape {z.shape}, expected ({params.dims.K},)")
    return Clamp(x=x, z=z)


def initial_state(params: HarmoniumParams, clamp: Optional[Clamp] = None) -> GmfState:
    clamp = _check_clamp(params, clamp)
    nu = clamp.x if clamp.x is not None else np.minimum(np.exp(params.alpha), 1.0)
    mu = clamp.z if clamp.z is not None else params.variance * params.beta
    return GmfState(nu=np.array(nu, dtype=float), mu=np.array(mu), gamma=np.zeros(params.dims.J))


def _gamma_update(params: HarmoniumParams, nu, mu) -> np.ndarray:
    return params.W.T @ nu + params.U.T @ mu


def _mu_update(params: HarmoniumParams, gamma) -> np.ndarray:
    return params.variance * (params.beta + params.U @ gamma)


def _nu_update(params: HarmoniumParams, gamma) -> np.ndarray:
    return word_rates(params, gamma)


def fixed_point_residual(
    params: HarmoniumParams, state: GmfState, clamp: Optional[Clamp] = None
) -> float:
    """Max-norm gap between the state and the fixed-point equations evaluated at it."""
    clamp = _check_clamp(params, clamp)
    gaps = [np.abs(_gamma_update(params, state.nu, state.mu) - state.gamma)]
    if clamp.z is None and params.dims.K:
        gaps.append(np.abs(_mu_update(params, state.gamma) - state.mu))
    if clamp.x is None:
        gaps.append(np.abs(_nu_update(params, state.gamma) - state.nu))
    return float(max(np.max(g) for g in gaps if g.size))


def gmf_fixed_point(
    params: HarmoniumParams,
    gmf: Optional[GmfConfig] = None,
    clamp: Optional[Clamp] = None,
    init: Optional[GmfState] = None,
    observation: Optional[int] = None,
) -> GmfResult:
    gmf = gmf or GmfConfig()
    clamp = _check_clamp(params, clamp)
    start = initial_state(params, clamp)
    if init is not None:
        start = GmfState(
            nu=start.nu if clamp.x is not None else np.array(init.nu, dtype=float),
            mu=start.mu if clamp.z is not None else np.array(init.mu, dtype=float),
            gamma=np.array(init.gamma, dtype=float),
        )
    nu, mu, gamma = start.nu, start.mu, start.gamma
    d = gmf.damping

    previous = np.inf
    rising = 0
    residual = np.inf
    for iteration in range(1, gmf.max_iter + 1):
        gamma = (1 - d) * _gamma_update(params, nu, mu) + d * gamma
        if clamp.z is None:
            mu = (1 - d) * _mu_update(params, gamma) + d * mu
        if clamp.x is None:
            nu = (1 - d) * _nu_update(params, gamma) + d * nu
        state = GmfState(nu=nu, mu=mu, gamma=gamma)
        residual = fixed_point_residual(params, state, clamp)
        if not np.isfinite(residual):
            raise DivergenceError("Mean-field state became non-finite", iteration, observation)
        if residual < gmf.tol:
            log.debug(
                f"[gmf_fixed_point] converged in {iteration} sweeps (residual {residual:.3g})"
            )
            return GmfResult(state, iteration, residual, True)
        rising = rising + 1 if residual > previous else 0
        if rising >= gmf.divergence_window:
            log.warning(
                f"[gmf_fixed_point] residual rose for {rising} consecutive sweeps "
                f"(now {residual:.3g})"
            )
            raise DivergenceError("Mean-field residual kept growing", iteration, observation)
        previous = residual
    log.warning(
        f"[gmf_fixed_point] stopped at max_iter={gmf.max_iter} with residual {residual:.3g}"
    )
    return GmfResult(GmfState(nu=nu, mu=mu, gamma=gamma), gmf.max_iter, float(residual), False)


def gmf_free_energy(params: HarmoniumParams, state: GmfState) -> float:
    """E_q[log q] - E_q[log p~]: KL(q || p) up to the constant log-partition.

    The log(x!) terms of the Poisson entropy and of the model cancel exactly.
    """
    nu, mu, gamma = state.nu, state.mu, state.gamma
    var = params.variance
    inv_var = params.inv_sigma**2
    expected_log_p = (
        params.alpha @ nu
        + params.beta @ mu
        - 0.5 * np.sum(inv_var * (mu**2 + var))
        - 0.5 * np.sum(gamma**2 + 1.0)
        + gamma @ (params.W.T @ nu + params.U.T @ mu)
    )
    safe_nu = np.maximum(nu, np.finfo(float).tiny)
    neg_entropy_x = np.sum(nu * np.log(safe_nu) - nu)
    entropy_z = 0.5 * np.sum(np.log(2 * np.pi * np.e * var))
    entropy_h = 0.5 * params.dims.J * np.log(2 * np.pi * np.e)
    return float(neg_entropy_x - entropy_z - entropy_h - expected_log_p)


def model_moments_q(params: HarmoniumParams, state: GmfState) -> Moments:
    """Sufficient-statistic expectations under the factorized q.

    With Var_q(x_i) = nu_i and Var_q(z_k) = sigma_k^2 and independence under q,
    E[x_i h'_j] = nu_i g_j + W_ij nu_i and E[z_k h'_j] = mu_k g_j + U_kj sigma_k^2,
    where g = W^T nu + U^T mu.
    """
    nu, mu = state.nu, state.mu
    var = params.variance
    g = params.W.T @ nu + params.U.T @ mu
    return Moments(
        x=nu,
        z=mu,
        z2=mu**2 + var,
        xg=np.outer(nu, g) + params.W * nu[:, None],
        zg=np.outer(mu, g) + params.U * var[:, None],
    )


def gmf_estimate(
    params: HarmoniumParams, batch, gmf: Optional[GmfConfig] = None
) -> Tuple[Gradients, GmfResult]:
    result = gmf_fixed_point(params, gmf)
    if not result.converged:
        raise DivergenceError(
            f"Mean field did not reach tol (residual {result.residual:.3g})", result.iterations
        )
    data = empirical_moments(params, batch)
    return gradient_from_moments(params, data, model_moments_q(params, result.state)), result


def gmf_gradient(params: HarmoniumParams, batch, gmf: Optional[GmfConfig] = None) -> Gradients:
    return gmf_estimate(params, batch, gmf)[0]


# =====================================================
# Clamped inference
# =====================================================


def _ranked(scores: np.ndarray, top_n: int) -> List[Tuple[int, float]]:
    order = np.lexsort((np.arange(scores.size), -scores))
    return [(int(i), float(scores[i])) for i in order[:top_n]]


def annotate(
    params: HarmoniumParams,
    z,
    top_n: int,
    gmf: Optional[GmfConfig] = None,
    observation: Optional[int] = None,
) -> List[Tuple[int, float]]:
    """Rank words for an image by the clamped mean-field Poisson means."""
    if not 1 <= int(top_n) <= params.dims.M:
        raise ValueError(f"top_n must lie in [1, {params.dims.M}], got {top_n}")
    result = gmf_fixed_point(params, gmf, clamp=Clamp(z=z), observation=observation)
    if not result.converged:
        raise DivergenceError(
            f"Clamped mean field did not reach tol (residual {result.residual:.3g})",
            result.iterations,
            observation,
        )
    return _ranked(result.state.nu, int(top_n))


def infer_image(
    params: HarmoniumParams, x, gmf: Optional[GmfConfig] = None
) -> np.ndarray:
    """Image means mu with the text wing clamped to observed counts."""
    result = gmf_fixed_point(params, gmf, clamp=Clamp(x=x))
    if not result.converged:
        raise DivergenceError(
            f"Clamped mean field did not reach tol (residual {result.residual:.3g})",
            result.iterations,
        )
    return result.state.mu
