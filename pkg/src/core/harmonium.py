"""Dual-wing harmonium: parameter and observation types, exact conditionals and
unnormalized log-densities.

The text wing is Poisson (word counts x), the image wing is Gaussian (histogram
bins z) and both couple to unit-variance Gaussian hidden units h:

    x_i | h ~ Poisson(exp(alpha_i + sum_j h_j W_ij))
    z_k | h ~ Normal(sigma_k^2 (beta_k + sum_j h_j U_kj), sigma_k^2)
    h_j | x, z ~ Normal(sum_i x_i W_ij + sum_k z_k U_kj, 1)
"""

from dataclasses import dataclass, field, replace as dc_replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

import config
from core import logger as log
from core.errors import InvalidParamsError, RateOverflowError, ShapeError

log = log.get_logger()

# A hidden configuration is a plain float vector of length J.
HiddenState = np.ndarray


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelDims:
    M: int  # vocabulary size
    K: int  # histogram bins
    J: int  # latent aspects

    def __post_init__(self):
        if int(self.M) < 1 or int(self.K) < 0 or int(self.J) < 1:
            raise ShapeError(f"Invalid dimensions M={self.M}, K={self.K}, J={self.J}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "J", int(self.J))


@dataclass(frozen=True, eq=False)
class HarmoniumParams:
    dims: ModelDims
    alpha: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray
    W: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        M, K, J = self.dims.M, self.dims.K, self.dims.J
        expected = {
            "alpha": (M,),
            "beta": (K,),
            "sigma": (K,),
            "W": (M, J),
            "U": (K, J),
        }
        for name, shape in expected.items():
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise ShapeError(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, dims: ModelDims) -> "HarmoniumParams":
        return cls(
            dims=dims,
            alpha=np.zeros(dims.M),
            beta=np.zeros(dims.K),
            sigma=np.ones(dims.K),
            W=np.zeros((dims.M, dims.J)),
            U=np.zeros((dims.K, dims.J)),
        )

    @property
    def safe_sigma(self) -> np.ndarray:
        return np.maximum(self.sigma, config.SIGMA_FLOOR)

    @property
    def inv_sigma(self) -> np.ndarray:
        return 1.0 / self.safe_sigma

    @property
    def variance(self) -> np.ndarray:
        return self.safe_sigma**2

    def replace(self, **changes) -> "HarmoniumParams":
        return dc_replace(self, **changes)

    def decoupled(self) -> "HarmoniumParams":
        return self.replace(W=np.zeros_like(self.W), U=np.zeros_like(self.U))

    def with_coupling_scale(self, scale: float) -> "HarmoniumParams":
        return self.replace(W=self.W * scale, U=self.U * scale)

    def permuted(
        self, word_perm: Optional[Sequence[int]] = None, bin_perm: Optional[Sequence[int]] = None
    ) -> "HarmoniumParams":
        """Reorder vocabulary and/or bins; entry i of the result is entry perm[i] here."""
        wp = np.arange(self.dims.M) if word_perm is None else np.asarray(word_perm)
        bp = np.arange(self.dims.K) if bin_perm is None else np.asarray(bin_perm)
        return self.replace(
            alpha=self.alpha[wp],
            W=self.W[wp],
            beta=self.beta[bp],
            sigma=self.sigma[bp],
            U=self.U[bp],
        )

    def allclose(self, other: "HarmoniumParams", atol: float = 0.0) -> bool:
        if self.dims != other.dims:
            return False
        return all(
            np.allclose(getattr(self, n), getattr(other, n), rtol=0.0, atol=atol)
            for n in ("alpha", "beta", "sigma", "W", "U")
        )


@dataclass(frozen=True, eq=False)
class Observation:
    x: np.ndarray  # word counts, length M
    z: np.ndarray  # histogram bins, length K

    def __post_init__(self):
        x = np.asarray(self.x)
        if x.ndim != 1:
            raise ShapeError(f"x must be a vector, got shape {x.shape}")
        if x.size and (np.any(x < 0) or np.any(np.asarray(x, dtype=float) != np.floor(x))):
            raise ShapeError("x must hold non-negative integer counts")
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1:
            raise ShapeError(f"z must be a vector, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ShapeError("z must be finite")
        object.__setattr__(self, "x", _frozen(x, dtype=np.int64))
        object.__setattr__(self, "z", _frozen(z))

    @classmethod
    def from_sparse(cls, M: int, words: dict, z) -> "Observation":
        x = np.zeros(M, dtype=np.int64)
        for i, count in words.items():
            x[int(i)] += int(count)
        return cls(x=x, z=z)


@dataclass(frozen=True)
class TruncationSpec:
    """Finite support for exact oracles: counts 0..x_max and a z-grid per bin."""

    x_max: int
    z_grid: Tuple[Tuple[float, float, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if int(self.x_max) < 1:
            raise ShapeError(f"x_max must be >= 1, got {self.x_max}")
        grid = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.z_grid)
        for lo, hi, n in grid:
            if n < 3 or n % 2 == 0:
                raise ShapeError(f"z-grid point count must be odd and >= 3, got {n}")
            if not hi > lo:
                raise ShapeError(f"z-grid bounds must satisfy lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "x_max", int(self.x_max))
        object.__setattr__(self, "z_grid", grid)

    @classmethod
    def uniform(
        cls, x_max: int, K: int, lo: float = -6.0, hi: float = 6.0, n: int = 41
    ) -> "TruncationSpec":
        return cls(x_max=x_max, z_grid=tuple((lo, hi, n) for _ in range(K)))

    def grid_for(self, K: int) -> Tuple[Tuple[float, float, int], ...]:
        if len(self.z_grid) == K:
            return self.z_grid
        if len(self.z_grid) == 1:
            return self.z_grid * K
        raise ShapeError(f"Truncation grid has {len(self.z_grid)} bins, model has {K}")


@dataclass(frozen=True)
class ValidityReport:
    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise InvalidParamsError(list(self.violations))


# =====================================================
# Validation
# =====================================================


def integrability_eigenvalue(params: HarmoniumParams) -> float:
    """Smallest eigenvalue of diag(1/sigma^2) - U U^T (inf when there are no bins).

    Uses the floored sigma, the same one every conditional uses.
    """
    if params.dims.K == 0:
        return float("inf")
    precision = np.diag(params.inv_sigma**2) - params.U @ params.U.T
    if not np.all(np.isfinite(precision)):
        return float("nan")
    return float(np.linalg.eigvalsh(precision)[0])


def validate_params(params: HarmoniumParams) -> ValidityReport:
    if not isinstance(params, HarmoniumParams):
        raise ShapeError(f"Expected HarmoniumParams, got {type(params).__name__}")
    violations: List[str] = []
    for name in ("alpha", "beta", "sigma", "W", "U"):
        arr = getattr(params, name)
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            violations.append(f"{name} has {bad.size} non-finite entries")
    bad_sigma = np.flatnonzero(~(params.sigma > 0))
    if bad_sigma.size:
        violations.append(f"sigma must be positive; bins {bad_sigma.tolist()} are not")
    if not violations:
        smallest = integrability_eigenvalue(params)
        if not smallest > 0:
            violations.append(
                f"diag(1/sigma^2) - U U^T is not positive definite "
                f"(smallest eigenvalue {smallest:.6g})"
            )
    if violations:
        log.debug(f"[validate_params] {len(violations)} violation(s): {violations}")
    return ValidityReport(tuple(violations))


def _check_observation(params: HarmoniumParams, obs: Observation) -> None:
    if obs.x.shape != (params.dims.M,) or obs.z.shape != (params.dims.K,):
        raise ShapeError(
            f"Observation shapes x{obs.x.shape}, z{obs.z.shape} do not match "
            f"M={params.dims.M}, K={params.dims.K}"
        )


def _check_hidden(params: HarmoniumParams, h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape[-1:] != (params.dims.J,):
        raise ShapeError(f"Hidden state has shape {h.shape}, expected last axis {params.dims.J}")
    return h


def as_matrices(
    params: HarmoniumParams,
    batch: Union[Sequence[Observation], Tuple[np.ndarray, np.ndarray]],
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack a batch into dense (X, Z) matrices; (X, Z) tuples pass through."""
    if isinstance(batch, tuple) and len(batch) == 2 and not isinstance(batch[0], Observation):
        X, Z = batch
        X = X.toarray() if sp.issparse(X) else np.asarray(X)
        X = X.astype(float)
        Z = np.asarray(Z, dtype=float).reshape(X.shape[0], params.dims.K)
    else:
        batch = list(batch)
        for obs in batch:
            _check_observation(params, obs)
        X = np.array([obs.x for obs in batch], dtype=float).reshape(len(batch), params.dims.M)
        Z = np.array([obs.z for obs in batch], dtype=float).reshape(len(batch), params.dims.K)
    if X.shape[1] != params.dims.M or Z.shape[1] != params.dims.K:
        raise ShapeError(f"Batch shapes {X.shape}, {Z.shape} do not match {params.dims}")
    return X, Z


# =====================================================
# Conditionals
# =====================================================


def hidden_conditional_mean(params: HarmoniumParams, obs: Observation) -> np.ndarray:
    _check_observation(params, obs)
    nz = np.flatnonzero(obs.x)
    gamma = obs.x[nz].astype(float) @ params.W[nz]
    if params.dims.K:
        gamma = gamma + obs.z @ params.U
    return np.asarray(gamma, dtype=float).reshape(params.dims.J)


def hidden_conditional_means(params: HarmoniumParams, X, Z) -> np.ndarray:
    """Row-wise hidden means for a batch; X may be a scipy sparse matrix."""
    gamma = X @ params.W
    gamma = np.asarray(gamma, dtype=float)
    if params.dims.K:
        gamma = gamma + np.asarray(Z, dtype=float) @ params.U
    return gamma


def word_log_rates(params: HarmoniumParams, h) -> np.ndarray:
    h = _check_hidden(params, h)
    return params.alpha + h @ params.W.T


def _capped_exp(params: HarmoniumParams, exponent: np.ndarray, cap: Optional[float]) -> np.ndarray:
    cap = config.EXPONENT_CAP if cap is None else cap
    # NaN and +inf fail the comparison as well as values above the cap.
    bad = np.flatnonzero(~(exponent <= cap))
    if bad.size:
        flat = int(bad[np.argmax(np.nan_to_num(exponent.flat[bad], nan=np.inf))])
        index = flat % params.dims.M
        value = float(exponent.flat[flat])
        log.error(f"[word_rates] log-rate {value:.4g} for word {index} rejected (cap {cap})")
        raise RateOverflowError(index, value, cap)
    return np.maximum(np.exp(exponent), np.finfo(float).tiny)


def word_rates(params: HarmoniumParams, h, cap: Optional[float] = None) -> np.ndarray:
    """Poisson rates exp(alpha + W h); works row-wise for a matrix of hidden states."""
    return _capped_exp(params, word_log_rates(params, h), cap)


def image_conditional(params: HarmoniumParams, h) -> Tuple[np.ndarray, np.ndarray]:
    h = _check_hidden(params, h)
    variance = params.variance
    mean = variance * (params.beta + h @ params.U.T)
    return mean, np.broadcast_to(variance, mean.shape).copy()


# =====================================================
# Log-densities
# =====================================================


def _input_terms(params: HarmoniumParams, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Per-row sum of the input-only potentials (no hidden or coupling terms)."""
    text = X @ params.alpha - gammaln(X + 1.0).sum(axis=1)
    image = Z @ params.beta - 0.5 * (Z**2 * params.inv_sigma**2).sum(axis=1)
    return text + image


def log_joint_unnorm(params: HarmoniumParams, obs: Observation, h) -> float:
    _check_observation(params, obs)
    h = _check_hidden(params, h)
    X = obs.x[None, :].astype(float)
    Z = obs.z[None, :]
    gamma = hidden_conditional_mean(params, obs)
    return float(_input_terms(params, X, Z)[0] - 0.5 * h @ h + h @ gamma)


def log_marginal_unnorm(params: HarmoniumParams, obs: Observation) -> float:
    """Hidden units integrated out, minus the constant (J/2) log(2 pi)."""
    _check_observation(params, obs)
    gamma = hidden_conditional_mean(params, obs)
    X = obs.x[None, :].astype(float)
    Z = obs.z[None, :]
    return float(_input_terms(params, X, Z)[0] + 0.5 * gamma @ gamma)


def log_marginal_unnorm_batch(params: HarmoniumParams, X, Z) -> np.ndarray:
    X = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float).reshape(X.shape[0], params.dims.K)
    gamma = hidden_conditional_means(params, X, Z)
    return _input_terms(params, X, Z) + 0.5 * (gamma**2).sum(axis=1)
