from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from core import logger as log

log = log.get_logger()


class TruncatedSvd(NamedTuple):
    left: np.ndarray  # N x J
    values: np.ndarray  # J, zero where padded
    right: np.ndarray  # D x J, orthonormal columns
    rank: int  # numerical rank used before padding
    padded: int  # columns added past the rank


def dense(matrix) -> np.ndarray:
    return matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)


def _fix_signs(left: np.ndarray, right: np.ndarray):
    """Make each right singular vector's largest-magnitude entry positive."""
    if right.shape[1] == 0:
        return left, right
    pivots = np.argmax(np.abs(right), axis=0)
    signs = np.sign(right[pivots, np.arange(right.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, right * signs


def truncated_svd(
    matrix, J: int, pad: str = "zero", rng: Optional[np.random.Generator] = None
) -> TruncatedSvd:
    """Rank-J SVD with a deterministic sign convention.

    When the numerical rank r is below J the remaining right vectors are either
    zero columns (pad="zero") or a random orthonormal complement of the first r
    (pad="random"); their singular values are zero either way.
    """
    A = dense(matrix)
    N, D = A.shape
    if J > D:
        raise ValueError(f"Cannot extract {J} components from {D} columns")
    if A.size == 0:
        s = np.zeros(0)
        Vt = np.zeros((0, D))
        U = np.zeros((N, 0))
    else:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False)
    tol = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(min(J, np.sum(s > tol)))
    left, right = _fix_signs(U[:, :rank], Vt[:rank].T)
    values = s[:rank]
    padded = J - rank
    if padded:
        log.warning(f"[truncated_svd] numerical rank {rank} below J={J}; padding {padded} columns")
        if pad == "random":
            rng = rng or np.random.default_rng(0)
            draw = rng.standard_normal((D, padded))
            draw -= right @ (right.T @ draw)
            extra, _ = np.linalg.qr(draw)
            extra = extra - right @ (right.T @ extra)
            extra, _ = np.linalg.qr(extra)
            _, extra = _fix_signs(np.zeros((N, padded)), extra)
        else:
            extra = np.zeros((D, padded))
        right = np.hstack([right, extra])
        left = np.hstack([left, np.zeros((N, padded))])
        values = np.concatenate([values, np.zeros(padded)])
    return TruncatedSvd(left=left, values=values, right=right, rank=rank, padded=padded)
