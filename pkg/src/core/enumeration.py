"""Exact oracles on a truncated support.

Word counts run over 0..x_max for every word and image bins over a rectangle-rule
grid, so the partition function and every model expectation become finite sums.
Only usable for tiny models; the state count is guarded by a budget.
"""

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

import config
from core import logger as log
from core.errors import BudgetExceededError
from core.gradients import Moments
from core.harmonium import (
    HarmoniumParams,
    TruncationSpec,
    as_matrices,
    log_marginal_unnorm_batch,
    validate_params,
)

log = log.get_logger()

_ROWS_PER_BLOCK = 512


def state_count(params: HarmoniumParams, trunc: TruncationSpec) -> int:
    grid = trunc.grid_for(params.dims.K)
    count = (trunc.x_max + 1) ** params.dims.M
    for _, _, n in grid:
        count *= n
    return int(count)


def _guard(params: HarmoniumParams, trunc: TruncationSpec, budget: Optional[int]) -> None:
    validate_params(params).raise_if_invalid()
    budget = config.ENUMERATION_BUDGET if budget is None else budget
    states = state_count(params, trunc)
    if states > budget:
        log.error(f"[enumeration] {states} states exceed budget {budget}")
        raise BudgetExceededError(states, budget)


def word_states(M: int, x_max: int) -> np.ndarray:
    return np.array(list(itertools.product(range(x_max + 1), repeat=M)), dtype=float)


def image_states(params: HarmoniumParams, trunc: TruncationSpec) -> Tuple[np.ndarray, float]:
    """Grid points (one row per state) and the log volume of one grid cell."""
    grid = trunc.grid_for(params.dims.K)
    if not grid:
        return np.zeros((1, 0)), 0.0
    axes = [np.linspace(lo, hi, n) for lo, hi, n in grid]
    log_volume = float(sum(np.log((hi - lo) / (n - 1)) for lo, hi, n in grid))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), log_volume


class _Table:
    """Log-marginal values for every (word state, image state) pair."""

    def __init__(self, params: HarmoniumParams, trunc: TruncationSpec):
        self.params = params
        self.X = word_states(params.dims.M, trunc.x_max)
        self.Z, self.log_volume = image_states(params, trunc)
        self.Gx = self.X @ params.W
        self.Gz = self.Z @ params.U
        self.a = self.X @ params.alpha - gammaln(self.X + 1.0).sum(axis=1)
        self.b = self.Z @ params.beta - 0.5 * (self.Z**2 * params.inv_sigma**2).sum(axis=1)

    def blocks(self):
        for start in range(0, self.X.shape[0], _ROWS_PER_BLOCK):
            stop = min(start + _ROWS_PER_BLOCK, self.X.shape[0])
            G = self.Gx[start:stop, None, :] + self.Gz[None, :, :]
            L = self.a[start:stop, None] + self.b[None, :] + 0.5 * (G**2).sum(axis=2)
            yield start, stop, G, L

    def log_partition(self) -> float:
        parts = [logsumexp(L) for _, _, _, L in self.blocks()]
        return float(logsumexp(parts) + self.log_volume)


def log_partition_truncated(
    params: HarmoniumParams, trunc: TruncationSpec, budget: Optional[int] = None
) -> float:
    _guard(params, trunc, budget)
    value = _Table(params, trunc).log_partition()
    log.debug(f"[log_partition_truncated] log Z = {value:.12g}")
    return value


@dataclass(frozen=True, eq=False)
class ExactMoments:
    moments: Moments
    log_partition: float


def exact_moments(
    params: HarmoniumParams, trunc: TruncationSpec, budget: Optional[int] = None
) -> ExactMoments:
    """Model expectations under the truncated, exactly normalized input marginal."""
    _guard(params, trunc, budget)
    table = _Table(params, trunc)
    log_z_sum = table.log_partition() - table.log_volume
    M, K, J = params.dims.M, params.dims.K, params.dims.J
    ex, ez, ez2 = np.zeros(M), np.zeros(K), np.zeros(K)
    exg, ezg = np.zeros((M, J)), np.zeros((K, J))
    for start, stop, G, L in table.blocks():
        P = np.exp(L - log_z_sum)
        Xb = table.X[start:stop]
        ex += P.sum(axis=1) @ Xb
        pz = P.sum(axis=0)
        ez += pz @ table.Z
        ez2 += pz @ table.Z**2
        exg += np.einsum("ab,ai,abj->ij", P, Xb, G)
        ezg += np.einsum("ab,bk,abj->kj", P, table.Z, G)
    return ExactMoments(Moments(ex, ez, ez2, exg, ezg), float(log_z_sum + table.log_volume))


def truncated_log_likelihood(
    params: HarmoniumParams,
    batch,
    trunc: TruncationSpec,
    budget: Optional[int] = None,
) -> float:
    """Average log-likelihood of the batch under the truncated model."""
    X, Z = as_matrices(params, batch)
    log_z = log_partition_truncated(params, trunc, budget)
    return float(np.mean(log_marginal_unnorm_batch(params, X, Z)) - log_z)


def word_state_marginal(
    params: HarmoniumParams, trunc: TruncationSpec, budget: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact marginal over word-count configurations (image bins summed out)."""
    _guard(params, trunc, budget)
    table = _Table(params, trunc)
    rows = [logsumexp(L, axis=1) for _, _, _, L in table.blocks()]
    log_p = np.concatenate(rows)
    return table.X.astype(np.int64), np.exp(log_p - logsumexp(log_p))


def exact_word_means_given_image(
    params: HarmoniumParams, z: Sequence[float], x_max: int, budget: Optional[int] = None
) -> np.ndarray:
    """E[x_i | z] with counts truncated at x_max."""
    validate_params(params).raise_if_invalid()
    budget = config.ENUMERATION_BUDGET if budget is None else budget
    states = (x_max + 1) ** params.dims.M
    if states > budget:
        raise BudgetExceededError(states, budget)
    X = word_states(params.dims.M, x_max)
    Z = np.tile(np.asarray(z, dtype=float), (X.shape[0], 1))
    L = log_marginal_unnorm_batch(params, X, Z)
    P = np.exp(L - logsumexp(L))
    return P @ X

