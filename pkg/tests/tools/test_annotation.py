import numpy as np
import pytest
import scipy.sparse as sp

from core.corpus import Corpus
from core.errors import EvaluationError
from core.harmonium import HarmoniumParams, ModelDims
from core.mean_field import GmfConfig, annotate
from tools.evaluation.annotation import annotation_ablation, annotation_eval
from tools.evaluation.ranking import ap_from_hits


def _corpus(X, Z):
    X = np.asarray(X)
    return Corpus(
        X=sp.csr_matrix(X),
        Z=np.asarray(Z, dtype=float),
        vocab=[f"w{i}" for i in range(X.shape[1])],
        bin_labels=[f"b{k}" for k in range(np.asarray(Z).shape[1])],
        ids=[f"d{n}" for n in range(X.shape[0])],
    )


@pytest.fixture
def coupled():
    return HarmoniumParams(
        dims=ModelDims(M=4, K=2, J=2),
        alpha=np.array([-0.5, -0.2, -1.0, 0.1]),
        beta=np.array([0.2, -0.3]),
        sigma=np.array([0.9, 1.1]),
        W=np.array([[0.3, -0.1], [-0.2, 0.25], [0.1, 0.1], [0.0, -0.3]]),
        U=np.array([[0.4, -0.2], [-0.3, 0.35]]),
    )


# =====================================================
# Annotation AP
# =====================================================


def test_degenerate_model_annotates_perfectly():
    params = HarmoniumParams.zeros(ModelDims(M=4, K=1, J=1)).replace(
        alpha=np.array([2.0, 1.0, -5.0, -5.0])
    )
    corpus = _corpus([[3, 1, 0, 0], [1, 2, 0, 0], [2, 5, 0, 0]], [[0.1], [-2.0], [4.0]])
    summary = annotation_eval(params, corpus, top_ns=[2, 4], gmf=GmfConfig(damping=0.0))
    assert summary["ap"] == {2: 1.0, 4: 1.0}
    assert summary["evaluated"] == 3


def test_uncoupled_images_give_one_shared_ranking(coupled):
    ablated = annotation_ablation(coupled)
    gmf = GmfConfig(tol=1e-10)
    corpus = _corpus(
        [[1, 0, 0, 2], [0, 3, 1, 0], [0, 0, 1, 0], [2, 1, 0, 1]],
        [[0.5, -1.0], [2.0, 0.3], [-0.7, 0.1], [0.0, 0.0]],
    )
    first = [i for i, _ in annotate(ablated, corpus.Z[0], 4, gmf=gmf)]
    for z in corpus.Z[1:]:
        assert [i for i, _ in annotate(ablated, z, 4, gmf=gmf)] == first

    expected = []
    for n in range(len(corpus)):
        truth = set(corpus.X[n].indices.tolist())
        expected.append(ap_from_hits([i in truth for i in first[:3]], len(truth)))
    summary = annotation_eval(ablated, corpus, top_ns=[3], gmf=gmf)
    assert summary["ap"][3] == pytest.approx(np.mean(expected))


def test_depths_beyond_vocabulary_are_capped(coupled):
    corpus = _corpus([[1, 0, 0, 0]], [[0.0, 0.0]])
    summary = annotation_eval(coupled, corpus, top_ns=[10])
    assert list(summary["ap"]) == [4]


def test_observations_without_words_are_flagged(coupled, caplog):
    corpus = _corpus([[0, 0, 0, 0], [0, 1, 0, 0]], [[1.0, 1.0], [0.0, 0.5]])
    summary = annotation_eval(coupled, corpus, top_ns=[2])
    assert summary["no_words"] == ["d0"]
    assert summary["evaluated"] == 1
    assert "no words to predict" in caplog.text


def test_nothing_to_annotate_is_an_error(coupled):
    with pytest.raises(EvaluationError):
        annotation_eval(coupled, _corpus([[0, 0, 0, 0]], [[1.0, 1.0]]), top_ns=[2])


def test_ablation_only_removes_image_couplings(coupled):
    ablated = annotation_ablation(coupled)
    assert not ablated.U.any()
    assert np.array_equal(ablated.W, coupled.W)
    assert np.array_equal(ablated.alpha, coupled.alpha)
    assert coupled.U.any()
