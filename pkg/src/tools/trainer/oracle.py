"""Exact gradients on the truncated model and the finite-difference check that
pins the sign and form of every learning rule."""

from typing import Dict, Optional

import numpy as np

from core import logger as log
from core.enumeration import exact_moments, truncated_log_likelihood
from core.gradients import COMPONENTS, Gradients, empirical_moments, gradient_from_moments
from core.harmonium import (
    HarmoniumParams,
    ModelDims,
    TruncationSpec,
    as_matrices,
    integrability_eigenvalue,
    validate_params,
)
from core.parallel import make_rng

log = log.get_logger()


def exact_gradient(
    params: HarmoniumParams, batch, trunc: TruncationSpec, budget: Optional[int] = None
) -> Gradients:
    batch = as_matrices(params, batch)
    model = exact_moments(params, trunc, budget).moments
    data = empirical_moments(params, batch)
    return gradient_from_moments(params, data, model)


def _perturbed(params: HarmoniumParams, component: str, index, delta: float):
    if component == "d_inv_sigma":
        inv_sigma = 1.0 / params.sigma
        inv_sigma = inv_sigma.copy()
        inv_sigma[index] += delta
        return params.replace(sigma=1.0 / inv_sigma)
    name = component[2:]
    values = getattr(params, name).copy()
    values[index] += delta
    return params.replace(**{name: values})


def finite_difference_gradient(
    params: HarmoniumParams, batch, trunc: TruncationSpec, step: float = 1e-5
) -> Gradients:
    """Central differences of the truncated average log-likelihood."""
    batch = as_matrices(params, batch)
    parts: Dict[str, np.ndarray] = {}
    for component in COMPONENTS:
        shape = getattr(params, component[2:] if component != "d_inv_sigma" else "sigma").shape
        grad = np.zeros(shape)
        for index in np.ndindex(*shape):
            up = truncated_log_likelihood(_perturbed(params, component, index, step), batch, trunc)
            down = truncated_log_likelihood(
                _perturbed(params, component, index, -step), batch, trunc
            )
            grad[index] = (up - down) / (2 * step)
        parts[component] = grad
    return Gradients(**parts)


def relative_errors(analytic: Gradients, numeric: Gradients) -> Dict[str, float]:
    """Per-component max of |a - n| / max(1, |a|, |n|).

    The unit floor makes this an absolute error for entries below 1 in magnitude and
    a relative error above that.
    """
    errors = {}
    for component in COMPONENTS:
        a = getattr(analytic, component)
        n = getattr(numeric, component)
        if a.size == 0:
            errors[component] = 0.0
            continue
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        errors[component] = float(np.max(np.abs(a - n) / denom))
    return errors


def check_gradient(
    params: HarmoniumParams, batch, trunc: TruncationSpec, step: float = 1e-5
) -> Dict[str, float]:
    analytic = exact_gradient(params, batch, trunc)
    numeric = finite_difference_gradient(params, batch, trunc, step)
    errors = relative_errors(analytic, numeric)
    log.info(f"[check_gradient] max relative error per component: {errors}")
    return errors


# =====================================================
# Canonical tiny model suite
# =====================================================


def canonical_truncation(K: int = 1) -> TruncationSpec:
    return TruncationSpec.uniform(x_max=8, K=K, lo=-6.0, hi=6.0, n=41)


def random_tiny_params(
    rng: np.random.Generator, dims: Optional[ModelDims] = None, coupling: float = 0.3
) -> HarmoniumParams:
    """Random M=2, K=1, J=2 model kept well inside the integrable region."""
    dims = dims or ModelDims(M=2, K=1, J=2)
    params = HarmoniumParams(
        dims=dims,
        alpha=rng.normal(0.0, 0.5, dims.M),
        beta=rng.normal(0.0, 0.5, dims.K),
        sigma=rng.uniform(0.7, 1.3, dims.K),
        W=rng.normal(0.0, coupling, (dims.M, dims.J)),
        U=rng.normal(0.0, coupling, (dims.K, dims.J)),
    )
    floor = 0.5 * float(np.min(params.inv_sigma**2))
    while not integrability_eigenvalue(params) > floor:
        params = params.replace(U=params.U * 0.5)
    validate_params(params).raise_if_invalid()
    return params


def oracle_suite(draws: int = 5, seed: int = 0, tol: float = 1e-5, batch_size: int = 20) -> Dict:
    """Finite-difference check of every learning rule on random canonical tiny models.

    Returns {"passed": bool, "draws": [{component: error}], "worst": {component: error}}.
    """
    trunc = canonical_truncation()
    summary = {"passed": True, "draws": [], "worst": {c: 0.0 for c in COMPONENTS}}
    for d in range(draws):
        rng = make_rng(seed, d)
        params = random_tiny_params(rng)
        X = rng.poisson(1.0, (batch_size, params.dims.M)).clip(0, trunc.x_max)
        Z = rng.normal(0.0, 1.0, (batch_size, params.dims.K))
        errors = check_gradient(params, (X, Z), trunc)
        summary["draws"].append(errors)
        for component, value in errors.items():
            summary["worst"][component] = max(summary["worst"][component], value)
            if not value < tol:
                summary["passed"] = False
                log.warning(f"[oracle_suite] draw {d}: {component} error {value:.3g} >= {tol}")
    log.info(f"[oracle_suite] {draws} draws, passed={summary['passed']}")
    return summary
