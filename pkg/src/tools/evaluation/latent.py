from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from core import logger as log
from core.corpus import Corpus
from core.errors import ShapeError
from core.harmonium import HarmoniumParams, hidden_conditional_means, validate_params
from core.linalg import truncated_svd

log = log.get_logger()


@dataclass(frozen=True, eq=False)
class LatentMatrix:
    """One latent vector per observation, rows aligned with `ids`."""

    rows: np.ndarray
    ids: List[str]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ShapeError(f"Latent rows must be a matrix, got shape {rows.shape}")
        if rows.shape[0] != len(self.ids):
            raise ShapeError(f"{rows.shape[0]} latent rows for {len(self.ids)} ids")
        if not np.all(np.isfinite(rows)):
            raise ShapeError("Latent rows must be finite")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "ids", list(self.ids))

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def J(self) -> int:
        return self.rows.shape[1]

    def row(self, doc_id: str) -> np.ndarray:
        return self.rows[self.ids.index(doc_id)]

    def subset(self, ids: Sequence[str]) -> "LatentMatrix":
        position = {doc_id: n for n, doc_id in enumerate(self.ids)}
        missing = [doc_id for doc_id in ids if doc_id not in position]
        if missing:
            raise KeyError(f"Unknown latent ids: {missing[:5]}")
        return LatentMatrix(rows=self.rows[[position[i] for i in ids]], ids=list(ids))


def project(params: HarmoniumParams, corpus: Corpus) -> LatentMatrix:
    validate_params(params).raise_if_invalid()
    if (corpus.M, corpus.K) != (params.dims.M, params.dims.K):
        raise ShapeError(
            f"Corpus is {corpus.M}x{corpus.K}, model is {params.dims.M}x{params.dims.K}"
        )
    rows = hidden_conditional_means(params, corpus.X, corpus.Z)
    log.debug(f"[project] {len(corpus)} observations onto J={params.dims.J}")
    return LatentMatrix(rows=rows, ids=corpus.ids)


def baseline_project(corpus: Corpus) -> LatentMatrix:
    """Raw [x | z] feature rows: the no-reduction retrieval baseline."""
    return LatentMatrix(rows=corpus.design_matrix(), ids=corpus.ids)


class LsiBasis(NamedTuple):
    right: np.ndarray  # (M + K) x J
    values: np.ndarray
    padded: int


def lsi_fit(corpus: Corpus, J: int) -> LsiBasis:
    if len(corpus) < 1:
        raise ShapeError("LSI needs at least one observation")
    svd = truncated_svd(corpus.design_matrix(), J, pad="zero")
    if svd.padded:
        log.warning(f"[lsi_fit] rank {svd.rank} below J={J}; {svd.padded} zero columns")
    return LsiBasis(right=svd.right, values=svd.values, padded=svd.padded)


def lsi_project(corpus: Corpus, J: int, basis: Optional[LsiBasis] = None) -> LatentMatrix:
    """Rows of A V: equal to U * s on the fitting corpus, and the fold-in of
    held-out documents when `basis` was fitted elsewhere."""
    basis = basis or lsi_fit(corpus, J)
    if basis.right.shape != (corpus.M + corpus.K, J):
        raise ShapeError(
            f"LSI basis has shape {basis.right.shape}, expected {(corpus.M + corpus.K, J)}"
        )
    return LatentMatrix(rows=corpus.design_matrix() @ basis.right, ids=corpus.ids)
