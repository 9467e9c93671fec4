from dataclasses import dataclass, field, replace as dc_replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from core.errors import ShapeError
from core.harmonium import ModelDims, Observation


@dataclass(frozen=True, eq=False)
class Corpus:
    """Paired text/image observations stored as an N x M sparse count matrix and
    an N x K dense histogram matrix, with vocabulary, bin labels, ids and
    optional category labels."""

    X: sp.csr_matrix
    Z: np.ndarray
    vocab: List[str]
    bin_labels: List[str]
    ids: List[str]
    labels: Optional[List[str]] = None
    _index: Dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        X = sp.csr_matrix(self.X, dtype=np.int64)
        Z = np.asarray(self.Z, dtype=float).reshape(X.shape[0], len(self.bin_labels))
        N = X.shape[0]
        if X.shape[1] != len(self.vocab):
            raise ShapeError(f"X has {X.shape[1]} columns but vocabulary has {len(self.vocab)}")
        if len(self.ids) != N:
            raise ShapeError(f"{len(self.ids)} ids for {N} observations")
        if self.labels is not None and len(self.labels) != N:
            raise ShapeError(f"{len(self.labels)} labels for {N} observations")
        if len(set(self.ids)) != N:
            raise ShapeError("Observation ids must be unique")
        if X.nnz and X.data.min() < 0:
            raise ShapeError("Word counts must be non-negative")
        if not np.all(np.isfinite(Z)):
            raise ShapeError("Histogram values must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "vocab", list(self.vocab))
        object.__setattr__(self, "bin_labels", list(self.bin_labels))
        object.__setattr__(self, "ids", list(self.ids))
        if self.labels is not None:
            object.__setattr__(self, "labels", list(self.labels))
        object.__setattr__(self, "_index", {doc_id: n for n, doc_id in enumerate(self.ids)})

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def M(self) -> int:
        return len(self.vocab)

    @property
    def K(self) -> int:
        return len(self.bin_labels)

    def dims(self, J: int) -> ModelDims:
        return ModelDims(M=self.M, K=self.K, J=J)

    def observation(self, n: int) -> Observation:
        return Observation(x=self.X[n].toarray().ravel(), z=self.Z[n])

    @property
    def observations(self) -> List[Observation]:
        return [self.observation(n) for n in range(len(self))]

    def position(self, doc_id: str) -> int:
        return self._index[doc_id]

    def label_map(self) -> Dict[str, str]:
        if self.labels is None:
            return {}
        return dict(zip(self.ids, self.labels))

    def design_matrix(self) -> np.ndarray:
        """N x (M + K) stacked [X | Z]."""
        return np.hstack([self.X.toarray().astype(float), self.Z])

    def subset(self, ids: Sequence[str]) -> "Corpus":
        rows = [self._index[doc_id] for doc_id in ids]
        return Corpus(
            X=self.X[rows],
            Z=self.Z[rows],
            vocab=self.vocab,
            bin_labels=self.bin_labels,
            ids=[self.ids[r] for r in rows],
            labels=None if self.labels is None else [self.labels[r] for r in rows],
        )

    def with_images(self, Z: np.ndarray) -> "Corpus":
        return dc_replace(self, Z=np.asarray(Z, dtype=float), _index={})

    def equals(self, other: "Corpus") -> bool:
        return (
            self.vocab == other.vocab
            and self.bin_labels == other.bin_labels
            and self.ids == other.ids
            and self.labels == other.labels
            and self.X.shape == other.X.shape
            and (self.X != other.X).nnz == 0
            and np.array_equal(self.Z, other.Z)
        )
