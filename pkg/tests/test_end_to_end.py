import pytest

import config
from tools.corpus_io.synthetic import generate_synthetic, train_test_ids, two_cluster_spec
from tools.evaluation.annotation import annotation_ablation, annotation_eval
from tools.evaluation.classify import nearest_centroid_eval
from tools.evaluation.latent import project
from tools.evaluation.ranking import retrieval_eval
from tools.trainer.normalize import normalize_features
from tools.trainer.train import TrainConfig, train


@pytest.fixture(scope="module")
def trained():
    corpus, _ = normalize_features(generate_synthetic(two_cluster_spec(N=400, M=50, K=10)))
    split = train_test_ids(corpus, 0.25, seed=0)
    params, report = train(corpus.subset(split[0]), corpus.dims(5), TrainConfig())
    return corpus, split, params, report


# =====================================================
# Two-cluster corpus, default contrastive-divergence training
# =====================================================


@pytest.mark.slow
def test_clusters_separate_in_latent_space(trained):
    corpus, split, params, _ = trained
    latents = project(params, corpus)
    result = nearest_centroid_eval(latents, corpus.label_map(), split)
    assert result.accuracy >= 0.95


@pytest.mark.slow
def test_same_cluster_documents_are_retrieved_first(trained):
    corpus, (train_ids, test_ids), params, _ = trained
    result = retrieval_eval(project(params, corpus), corpus.label_map(), (test_ids, train_ids))
    assert result.mean_ap >= 0.9


@pytest.mark.slow
def test_images_improve_annotation(trained):
    corpus, (_, test_ids), params, _ = trained
    held_out = corpus.subset(test_ids)
    coupled = annotation_eval(params, held_out, top_ns=[10])
    ablated = annotation_eval(annotation_ablation(params), held_out, top_ns=[10])
    assert coupled["ap"][10] > ablated["ap"][10]


@pytest.mark.slow
def test_training_stays_well_behaved(trained):
    _, _, _, report = trained
    assert len(report.records) == config.TRAIN_EPOCHS
    assert sum(r.divergences for r in report.records) == 0
