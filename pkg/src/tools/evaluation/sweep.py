"""Latent-dimension sweeps and learning curves over a train/test split."""

from typing import Dict, List, Optional, Sequence, Tuple

import config
from core import logger as log
from core.corpus import Corpus
from core.errors import EvaluationError
from tools.evaluation.annotation import annotation_eval
from tools.evaluation.classify import nearest_centroid_eval
from tools.evaluation.latent import LatentMatrix, baseline_project, lsi_fit, lsi_project, project
from tools.evaluation.ranking import retrieval_eval
from tools.trainer.train import TrainConfig, train

log = log.get_logger()


def _scores(latents: LatentMatrix, labels, train_ids, test_ids) -> Dict:
    classified = nearest_centroid_eval(latents, labels, (train_ids, test_ids))
    retrieved = retrieval_eval(latents, labels, (test_ids, train_ids))
    return {"error": classified.error, "mean_ap": retrieved.mean_ap}


def sweep_dimensions(
    corpus: Corpus,
    split: Tuple[Sequence[str], Sequence[str]],
    dims: Optional[Sequence[int]] = None,
    train_config: Optional[TrainConfig] = None,
    annotation_top_n: int = 10,
    fit_on_all: bool = True,
) -> List[Dict]:
    """Train a harmonium and fit LSI for every latent dimension.

    Each row: {"method", "J", "error", "mean_ap", "annotation_ap"}. Queries are the
    test ids and the index is the training ids; annotation AP is reported for the
    harmonium only. One extra row scores the raw-feature baseline.

    Both models ignore labels, so by default they are fitted on every document and
    the split only decides which latents train the classifier. Annotation is always
    scored with a harmonium that never saw the test ids. `fit_on_all=False` fits
    everything on the training ids.
    """
    if corpus.labels is None:
        raise EvaluationError("Dimension sweeps need category labels")
    dims = list(dims or config.LATENT_DIM_SWEEP)
    train_config = train_config or TrainConfig()
    train_ids, test_ids = list(split[0]), list(split[1])
    labels = corpus.label_map()
    train_corpus = corpus.subset(train_ids)
    test_corpus = corpus.subset(test_ids)
    fit_corpus = corpus if fit_on_all else train_corpus

    rows = [{"method": "baseline", "J": corpus.M + corpus.K, "annotation_ap": None}]
    rows[0].update(_scores(baseline_project(corpus), labels, train_ids, test_ids))

    for J in dims:
        log.info(f"📐 [sweep_dimensions] J={J}")
        params, _ = train(fit_corpus, corpus.dims(J), train_config)
        row = {"method": "dwh", "J": J}
        row.update(_scores(project(params, corpus), labels, train_ids, test_ids))
        held_out = params
        if fit_on_all:
            held_out, _ = train(train_corpus, corpus.dims(J), train_config)
        gmf = train_config.gmf
        annotated = annotation_eval(held_out, test_corpus, [annotation_top_n], gmf=gmf)
        row["annotation_ap"] = next(iter(annotated["ap"].values()))
        rows.append(row)

        basis = lsi_fit(fit_corpus, J)
        row = {"method": "lsi", "J": J, "annotation_ap": None}
        row.update(_scores(lsi_project(corpus, J, basis), labels, train_ids, test_ids))
        rows.append(row)
    return rows


def learning_curve(
    corpus: Corpus,
    J: int,
    split: Tuple[Sequence[str], Sequence[str]],
    train_config: Optional[TrainConfig] = None,
    every: int = 10,
    fit_on_all: bool = True,
) -> List[Dict]:
    """Retrieval mean AP of test queries against the training index, sampled every
    `every` epochs (and after the last one). The harmonium is trained on every
    document unless `fit_on_all` is False."""
    if corpus.labels is None:
        raise EvaluationError("Learning curves need category labels")
    if every < 1:
        raise ValueError(f"every must be positive, got {every}")
    train_config = train_config or TrainConfig()
    train_ids, test_ids = list(split[0]), list(split[1])
    labels = corpus.label_map()
    rows = []

    def record(epoch, params):
        if epoch % every and epoch != train_config.epochs:
            return
        result = retrieval_eval(project(params, corpus), labels, (test_ids, train_ids))
        rows.append({"epoch": epoch, "mean_ap": result.mean_ap})
        log.info(f"[learning_curve] epoch {epoch}: mean AP {result.mean_ap:.4f}")

    fit_corpus = corpus if fit_on_all else corpus.subset(train_ids)
    train(fit_corpus, corpus.dims(J), train_config, callback=record)
    return rows
