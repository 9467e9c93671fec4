import json

import numpy as np
import pytest

from tools.corpus_io.synthetic import (
    SyntheticCluster,
    SyntheticSpec,
    generate_synthetic,
    load_synthetic_spec,
    spec_from_dict,
    train_test_ids,
    two_cluster_spec,
)


# =====================================================
# Generation
# =====================================================


def test_single_noiseless_cluster_is_degenerate():
    spec = SyntheticSpec(
        clusters=[SyntheticCluster(rates=[2.0, 0.0, 5.0], image_mean=[1.0, -1.0], weight=1.0)],
        N=50,
        noise=0.0,
    )
    corpus = generate_synthetic(spec)
    assert len(corpus) == 50
    assert np.array_equal(corpus.Z, np.tile([1.0, -1.0], (50, 1)))
    assert not corpus.X[:, 1].toarray().any()
    assert set(corpus.labels) == {"cluster0"}
    assert corpus.vocab == ["w0", "w1", "w2"]


def test_cluster_means_match_rates():
    corpus = generate_synthetic(two_cluster_spec(N=2000, M=6, K=4, rate=2.0, seed=4))
    X = corpus.X.toarray()
    members = np.array(corpus.labels) == "cluster0"
    n = members.sum()
    assert 800 < n < 1200
    means = X[members].mean(axis=0)
    assert np.all(np.abs(means[:3] - 2.0) < 4 * np.sqrt(2.0 / n))
    assert not X[members][:, 3:].any()
    assert np.allclose(corpus.Z[members].mean(axis=0), [1.0, 1.0, 0.0, 0.0], atol=0.02)


def test_generation_is_deterministic():
    spec = two_cluster_spec(N=60, M=8, K=2, seed=9)
    assert generate_synthetic(spec).equals(generate_synthetic(spec))
    other = generate_synthetic(two_cluster_spec(N=60, M=8, K=2, seed=10))
    assert not other.equals(generate_synthetic(spec))


def test_spec_validation():
    cluster = SyntheticCluster(rates=[1.0], image_mean=[0.0], weight=0.5)
    with pytest.raises(ValueError):
        SyntheticSpec(clusters=[cluster], N=10)
    with pytest.raises(ValueError):
        SyntheticSpec(clusters=[], N=10)
    with pytest.raises(ValueError):
        SyntheticSpec(
            clusters=[SyntheticCluster(rates=[-1.0], image_mean=[0.0], weight=1.0)], N=10
        )
    with pytest.raises(ValueError):
        SyntheticSpec(
            clusters=[cluster, SyntheticCluster(rates=[1.0, 2.0], image_mean=[0.0], weight=0.5)],
            N=10,
        )


# =====================================================
# Spec files
# =====================================================


def test_spec_from_dict_forms():
    explicit = spec_from_dict(
        {
            "clusters": [
                {"rates": [1, 0], "image_mean": [0.5], "weight": 0.25},
                {"rates": [0, 1], "image_mean": [-0.5], "weight": 0.75},
            ],
            "N": 30,
            "vocab": ["cat", "dog"],
        }
    )
    assert (explicit.M, explicit.K, explicit.N) == (2, 1, 30)
    assert generate_synthetic(explicit).vocab == ["cat", "dog"]
    shorthand = spec_from_dict({"two_cluster": {"N": 20, "M": 4, "K": 2}})
    assert len(shorthand.clusters) == 2 and shorthand.M == 4


def test_load_synthetic_spec(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"two_cluster": {"N": 10, "M": 4, "K": 2, "seed": 3}}))
    assert load_synthetic_spec(path).seed == 3
    path.write_text("{not json")
    with pytest.raises(ValueError):
        load_synthetic_spec(path)
    path.write_text(json.dumps({"N": 10}))
    with pytest.raises(ValueError):
        load_synthetic_spec(path)


# =====================================================
# Splits
# =====================================================


def test_train_test_ids(two_cluster_corpus):
    train, test = train_test_ids(two_cluster_corpus, 0.25, seed=5)
    assert len(test) == 30
    assert sorted(train + test) == sorted(two_cluster_corpus.ids)
    assert not set(train) & set(test)
    assert train == [i for i in two_cluster_corpus.ids if i in set(train)]
    assert (train, test) == train_test_ids(two_cluster_corpus, 0.25, seed=5)
    with pytest.raises(ValueError):
        train_test_ids(two_cluster_corpus, 1.0)
