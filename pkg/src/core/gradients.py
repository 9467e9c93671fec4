"""Parameter-shaped gradient container and the sufficient statistics it differences.

Every estimator (contrastive divergence, mean field, exact enumeration) produces a
model-side `Moments` and subtracts it from the data-side `Moments` of the batch.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from core.harmonium import HarmoniumParams, as_matrices, hidden_conditional_means

COMPONENTS = ("d_alpha", "d_beta", "d_inv_sigma", "d_W", "d_U")


@dataclass(frozen=True, eq=False)
class Moments:
    """Expectations of the log-marginal's sufficient statistics.

    xg and zg are E[x_i h'_j] and E[z_k h'_j] with h' = W^T x + U^T z.
    """

    x: np.ndarray
    z: np.ndarray
    z2: np.ndarray
    xg: np.ndarray
    zg: np.ndarray

    def __add__(self, other: "Moments") -> "Moments":
        return Moments(
            self.x + other.x,
            self.z + other.z,
            self.z2 + other.z2,
            self.xg + other.xg,
            self.zg + other.zg,
        )

    def scaled(self, factor: float) -> "Moments":
        return Moments(
            self.x * factor,
            self.z * factor,
            self.z2 * factor,
            self.xg * factor,
            self.zg * factor,
        )


def moment_sums(params: HarmoniumParams, X: np.ndarray, Z: np.ndarray) -> Moments:
    """Unnormalized sums over rows; h' is recomputed from each (x, z) row."""
    G = hidden_conditional_means(params, X, Z)
    return Moments(
        x=X.sum(axis=0),
        z=Z.sum(axis=0),
        z2=(Z**2).sum(axis=0),
        xg=X.T @ G,
        zg=Z.T @ G,
    )


def empirical_moments(params: HarmoniumParams, batch) -> Moments:
    X, Z = as_matrices(params, batch)
    if X.shape[0] == 0:
        raise ValueError("Cannot compute moments of an empty batch")
    return moment_sums(params, X, Z).scaled(1.0 / X.shape[0])


@dataclass(frozen=True, eq=False)
class Gradients:
    d_alpha: np.ndarray
    d_beta: np.ndarray
    d_inv_sigma: np.ndarray  # with respect to 1/sigma
    d_W: np.ndarray
    d_U: np.ndarray

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in COMPONENTS}

    def flatten(self) -> np.ndarray:
        return np.concatenate([np.ravel(getattr(self, name)) for name in COMPONENTS])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flatten()))

    def cosine(self, other: "Gradients") -> float:
        a, b = self.flatten(), other.flatten()
        denom = np.linalg.norm(a) * np.linalg.norm(b)
        return float(a @ b / denom) if denom > 0 else 0.0

    def non_finite_component(self):
        for name in COMPONENTS:
            if not np.all(np.isfinite(getattr(self, name))):
                return name
        return None


def gradient_from_moments(params: HarmoniumParams, data: Moments, model: Moments) -> Gradients:
    """Learning rules as data-minus-model differences.

    The log-marginal carries -1/2 sum_k z_k^2 / sigma_k^2, so its derivative in
    1/sigma_k is -z_k^2 / sigma_k and the sigma rule is model-minus-data.
    """
    inv_sigma = params.inv_sigma
    return Gradients(
        d_alpha=data.x - model.x,
        d_beta=data.z - model.z,
        d_inv_sigma=inv_sigma * (model.z2 - data.z2),
        d_W=data.xg - model.xg,
        d_U=data.zg - model.zg,
    )
