"""Cluster-structured synthetic corpora for end-to-end checks.

Generation is directed and does not follow the harmonium: draw a cluster, then
x_i ~ Poisson(rate_i) and z ~ Normal(image_mean, noise^2 I).
"""

import json
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from core import logger as log
from core.corpus import Corpus
from core.parallel import make_rng

log = log.get_logger()


@dataclass(frozen=True, eq=False)
class SyntheticCluster:
    rates: np.ndarray  # length M, non-negative
    image_mean: np.ndarray  # length K
    weight: float


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    clusters: List[SyntheticCluster]
    N: int
    noise: float = 0.1
    seed: int = 0
    vocab: Optional[List[str]] = None
    bin_labels: Optional[List[str]] = None

    def __post_init__(self):
        if not self.clusters:
            raise ValueError("A synthetic spec needs at least one cluster")
        if int(self.N) < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        if self.noise < 0:
            raise ValueError(f"noise must be non-negative, got {self.noise}")
        clusters = [
            SyntheticCluster(
                rates=np.asarray(c.rates, dtype=float),
                image_mean=np.asarray(c.image_mean, dtype=float),
                weight=float(c.weight),
            )
            for c in self.clusters
        ]
        M, K = clusters[0].rates.size, clusters[0].image_mean.size
        for c in clusters:
            if c.rates.shape != (M,) or c.image_mean.shape != (K,):
                raise ValueError("All clusters must share M and K")
            if np.any(c.rates < 0) or not np.all(np.isfinite(c.rates)):
                raise ValueError("Word rates must be finite and non-negative")
            if not c.weight > 0:
                raise ValueError(f"Cluster weights must be positive, got {c.weight}")
        if abs(sum(c.weight for c in clusters) - 1.0) > 1e-9:
            raise ValueError("Cluster weights must sum to 1")
        if self.vocab is not None and len(self.vocab) != M:
            raise ValueError(f"{len(self.vocab)} vocabulary words for M={M}")
        if self.bin_labels is not None and len(self.bin_labels) != K:
            raise ValueError(f"{len(self.bin_labels)} bin labels for K={K}")
        object.__setattr__(self, "clusters", clusters)

    @property
    def M(self) -> int:
        return self.clusters[0].rates.size

    @property
    def K(self) -> int:
        return self.clusters[0].image_mean.size


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    rng = make_rng(spec.seed)
    weights = np.array([c.weight for c in spec.clusters])
    assignment = rng.choice(len(spec.clusters), size=spec.N, p=weights / weights.sum())
    rates = np.array([c.rates for c in spec.clusters])[assignment]
    means = np.array([c.image_mean for c in spec.clusters])[assignment].reshape(spec.N, spec.K)
    X = rng.poisson(rates)
    Z = means + spec.noise * rng.standard_normal(means.shape)
    corpus = Corpus(
        X=sp.csr_matrix(X.astype(np.int64)),
        Z=Z,
        vocab=spec.vocab or [f"w{i}" for i in range(spec.M)],
        bin_labels=spec.bin_labels or [f"b{k}" for k in range(spec.K)],
        ids=[f"doc{n:05d}" for n in range(spec.N)],
        labels=[f"cluster{c}" for c in assignment],
    )
    counts = np.bincount(assignment, minlength=len(spec.clusters)).tolist()
    log.info(f"🧪 [generate_synthetic] N={spec.N}, M={spec.M}, K={spec.K}, clusters={counts}")
    return corpus


def two_cluster_spec(
    N: int = 400,
    M: int = 50,
    K: int = 10,
    rate: float = 1.0,
    image_level: float = 1.0,
    noise: float = 0.1,
    seed: int = 0,
) -> SyntheticSpec:
    """Two equally weighted clusters on disjoint halves of the vocabulary and of the bins."""
    half_m, half_k = M // 2, K // 2
    clusters = []
    for c in range(2):
        rates = np.zeros(M)
        image_mean = np.zeros(K)
        if c == 0:
            rates[:half_m] = rate
            image_mean[:half_k] = image_level
        else:
            rates[half_m:] = rate
            image_mean[half_k:] = image_level
        clusters.append(SyntheticCluster(rates=rates, image_mean=image_mean, weight=0.5))
    return SyntheticSpec(clusters=clusters, N=N, noise=noise, seed=seed)


def _cluster(entry: dict) -> SyntheticCluster:
    return SyntheticCluster(
        rates=np.asarray(entry["rates"], dtype=float),
        image_mean=np.asarray(entry.get("image_mean", []), dtype=float),
        weight=float(entry["weight"]),
    )


def spec_from_dict(data: dict) -> SyntheticSpec:
    """Either {"clusters": [{"rates", "image_mean", "weight"}, ...], "N", ...}
    or {"two_cluster": {keyword arguments of two_cluster_spec}}."""
    if "two_cluster" in data:
        return two_cluster_spec(**data["two_cluster"])
    return SyntheticSpec(
        clusters=[_cluster(c) for c in data["clusters"]],
        N=int(data["N"]),
        noise=float(data.get("noise", 0.1)),
        seed=int(data.get("seed", 0)),
        vocab=data.get("vocab"),
        bin_labels=data.get("bin_labels"),
    )


def load_synthetic_spec(path) -> SyntheticSpec:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path} is not valid JSON: {e}") from e
    try:
        return spec_from_dict(data)
    except (KeyError, TypeError) as e:
        raise ValueError(f"{path} is not a synthetic corpus spec: {e}") from e


def train_test_ids(
    corpus: Corpus, test_fraction: float = 0.25, seed: int = 0
) -> Tuple[List[str], List[str]]:
    """Deterministic split of corpus ids into (train, test), preserving corpus order."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = max(1, int(round(len(corpus) * test_fraction)))
    chosen = set(make_rng(seed, 1).permutation(len(corpus))[:n_test].tolist())
    train = [doc_id for n, doc_id in enumerate(corpus.ids) if n not in chosen]
    test = [doc_id for n, doc_id in enumerate(corpus.ids) if n in chosen]
    return train, test
