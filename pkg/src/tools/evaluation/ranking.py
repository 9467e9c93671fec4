"""Cosine retrieval and ranking metrics.

Average precision is the non-interpolated form: the mean over relevant items of
precision at their rank, divided by the total number of relevant items, so
relevant items missing from a truncated ranking contribute zero.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

import config
from core import logger as log
from core.errors import EvaluationError
from core.parallel import chunk_map
from tools.evaluation.latent import LatentMatrix

log = log.get_logger()


@dataclass(frozen=True)
class Ranking:
    query: str
    items: Tuple[Tuple[str, float], ...]

    @property
    def ids(self) -> List[str]:
        return [doc_id for doc_id, _ in self.items]

    @property
    def scores(self) -> np.ndarray:
        return np.array([score for _, score in self.items], dtype=float)

    def __len__(self) -> int:
        return len(self.items)


def top_indices(scores: np.ndarray, n: int) -> np.ndarray:
    """Indices of the n largest scores, ties by ascending index."""
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:n]


def cosine_scores(query: np.ndarray, rows: np.ndarray) -> np.ndarray:
    query = np.asarray(query, dtype=float)
    q_norm = np.linalg.norm(query)
    if not q_norm > 0:
        raise EvaluationError("Cannot rank against a zero query vector")
    norms = np.linalg.norm(rows, axis=1)
    scores = np.full(rows.shape[0], -1.0)
    nonzero = norms > 0
    scores[nonzero] = rows[nonzero] @ query / (norms[nonzero] * q_norm)
    return scores


def _ranking(query_id, scores, ids, id_order, top_n) -> Ranking:
    order = np.lexsort((id_order, -scores))
    if top_n is not None:
        order = order[:top_n]
    return Ranking(query=query_id, items=tuple((ids[i], float(scores[i])) for i in order))


def retrieve(
    query_latent,
    index: LatentMatrix,
    top_n: Optional[int] = None,
    query_id: str = "",
) -> Ranking:
    """Rank index rows by cosine similarity to the query, ties by ascending id.

    Zero index rows score -1.
    """
    if top_n is not None and int(top_n) < 1:
        raise ValueError(f"top_n must be positive, got {top_n}")
    scores = cosine_scores(query_latent, index.rows)
    id_order = np.argsort(np.argsort(np.array(index.ids)))
    return _ranking(query_id, scores, index.ids, id_order, top_n)


# =====================================================
# Metrics
# =====================================================


def _hits(ranking: Ranking, relevant: Iterable[str]) -> Tuple[np.ndarray, int]:
    relevant = set(relevant)
    if not relevant:
        raise EvaluationError("Relevant set is empty")
    return np.array([doc_id in relevant for doc_id in ranking.ids], dtype=bool), len(relevant)


def ap_from_hits(hits: np.ndarray, n_relevant: int) -> float:
    hits = np.asarray(hits, dtype=bool)
    if n_relevant < 1:
        raise EvaluationError("Relevant set is empty")
    if not hits.any():
        return 0.0
    ranks = np.flatnonzero(hits) + 1
    precisions = np.arange(1, ranks.size + 1) / ranks
    return float(precisions.sum() / n_relevant)


def average_precision(ranking: Ranking, relevant: Iterable[str]) -> float:
    hits, n_relevant = _hits(ranking, relevant)
    return ap_from_hits(hits, n_relevant)


def precision_recall_curve(ranking: Ranking, relevant: Iterable[str]) -> List[Tuple[float, float]]:
    """One (recall, precision) point per rank."""
    hits, n_relevant = _hits(ranking, relevant)
    found = np.cumsum(hits)
    ranks = np.arange(1, hits.size + 1)
    return list(zip((found / n_relevant).tolist(), (found / ranks).tolist()))


def interpolated_precision(
    curve: Sequence[Tuple[float, float]], grid_points: Optional[int] = None
) -> np.ndarray:
    """Max precision at recall >= r for r on an evenly spaced grid over [0, 1]."""
    grid = np.linspace(0.0, 1.0, grid_points or config.RECALL_GRID_POINTS)
    if not curve:
        return np.zeros_like(grid)
    recall = np.array([r for r, _ in curve])
    precision = np.array([p for _, p in curve])
    out = np.zeros_like(grid)
    for g, level in enumerate(grid):
        reached = recall >= level - 1e-12
        if reached.any():
            out[g] = precision[reached].max()
    return out


@dataclass
class RetrievalResult:
    mean_ap: float
    per_query: Dict[str, float] = field(default_factory=dict)
    recall_grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    precision_grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    skipped: List[str] = field(default_factory=list)

    def pr_points(self) -> List[Tuple[float, float]]:
        return list(zip(self.recall_grid.tolist(), self.precision_grid.tolist()))


def retrieval_eval(
    latents: LatentMatrix,
    labels: Mapping[str, str],
    split: Tuple[Sequence[str], Sequence[str]],
    workers: Optional[int] = None,
) -> RetrievalResult:
    """Each query ranks the index by cosine similarity; same-label index items are
    relevant. A query's own id never appears in its ranking. Queries whose label
    has no index support, and zero query vectors, are skipped and reported."""
    query_ids, index_ids = list(split[0]), list(split[1])
    if not query_ids or not index_ids:
        raise EvaluationError("Retrieval needs at least one query and one index item")
    unlabeled = [i for i in query_ids + index_ids if i not in labels]
    if unlabeled:
        raise EvaluationError(f"{len(unlabeled)} ids have no label, e.g. {unlabeled[:3]}")

    index = latents.subset(index_ids)
    queries = latents.subset(query_ids)
    index_labels = np.array([labels[i] for i in index_ids], dtype=object)
    id_order = np.argsort(np.argsort(np.array(index_ids)))
    position = {doc_id: n for n, doc_id in enumerate(index_ids)}
    grid = np.linspace(0.0, 1.0, config.RECALL_GRID_POINTS)

    def evaluate(lo, hi):
        out = []
        for q in range(lo, hi):
            query_id = query_ids[q]
            keep = np.ones(len(index_ids), dtype=bool)
            if query_id in position:
                keep[position[query_id]] = False
            relevant = [
                index_ids[n]
                for n in np.flatnonzero(keep & (index_labels == labels[query_id]))
            ]
            if not relevant or not np.any(queries.rows[q]):
                out.append((query_id, None, None))
                continue
            scores = cosine_scores(queries.rows[q], index.rows)
            scores[~keep] = -np.inf
            ranking = _ranking(query_id, scores, index_ids, id_order, int(keep.sum()))
            ap = average_precision(ranking, relevant)
            curve = interpolated_precision(precision_recall_curve(ranking, relevant))
            out.append((query_id, ap, curve))
        return out

    results = [row for part in chunk_map(evaluate, len(query_ids), workers) for row in part]
    per_query = {q: ap for q, ap, _ in results if ap is not None}
    skipped = [q for q, ap, _ in results if ap is None]
    if skipped:
        log.warning(
            f"[retrieval_eval] skipped {len(skipped)} quer(ies) with no relevant index "
            f"items or a zero latent: {skipped[:5]}"
        )
    if not per_query:
        raise EvaluationError("No query has a relevant index item")
    curves = np.array([c for _, ap, c in results if ap is not None])
    mean_ap = float(np.mean(list(per_query.values())))
    log.info(f"[retrieval_eval] {len(per_query)} queries, mean AP {mean_ap:.4f}")
    return RetrievalResult(
        mean_ap=mean_ap,
        per_query=per_query,
        recall_grid=grid,
        precision_grid=curves.mean(axis=0),
        skipped=skipped,
    )
