from typing import Dict, Optional, Sequence

import numpy as np

import config
from core import logger as log
from core.corpus import Corpus
from core.errors import DivergenceError, EvaluationError, RateOverflowError
from core.harmonium import HarmoniumParams
from core.mean_field import GmfConfig, annotate
from tools.evaluation.ranking import ap_from_hits

log = log.get_logger()


def annotation_ablation(params: HarmoniumParams) -> HarmoniumParams:
    """Same model with the image couplings removed, so images cannot move the ranking."""
    return params.replace(U=np.zeros_like(params.U))


def annotation_eval(
    params: HarmoniumParams,
    corpus: Corpus,
    top_ns: Optional[Sequence[int]] = None,
    gmf: Optional[GmfConfig] = None,
) -> Dict:
    """Average precision of image-to-word annotation, per ranking depth.

    Ground truth for an observation is its set of words with x_i > 0. Each image
    is annotated once at the deepest requested depth; shallower depths score the
    prefix of that ranking.

    Returns a summary dict:
    {"ap": {top_n: mean AP}, "evaluated": int, "no_words": [ids], "diverged": [ids]}
    """
    top_ns = sorted({min(int(n), params.dims.M) for n in (top_ns or config.ANNOTATION_TOP_N)})
    if not top_ns or top_ns[0] < 1:
        raise ValueError(f"top_n values must be positive, got {top_ns}")
    deepest = top_ns[-1]
    summary = {"ap": {}, "evaluated": 0, "no_words": [], "diverged": []}
    scores = {n: [] for n in top_ns}

    for n in range(len(corpus)):
        doc_id = corpus.ids[n]
        truth = set(corpus.X[n].indices[corpus.X[n].data > 0].tolist())
        if not truth:
            summary["no_words"].append(doc_id)
            continue
        try:
            ranked = annotate(params, corpus.Z[n], deepest, gmf=gmf, observation=n)
        except (DivergenceError, RateOverflowError) as e:
            log.warning(f"[annotation_eval] skipping {doc_id}: {e}")
            summary["diverged"].append(doc_id)
            continue
        hits = np.array([word in truth for word, _ in ranked], dtype=bool)
        for top_n in top_ns:
            scores[top_n].append(ap_from_hits(hits[:top_n], len(truth)))
        summary["evaluated"] += 1

    if not summary["evaluated"]:
        raise EvaluationError("No observation could be annotated")
    summary["ap"] = {top_n: float(np.mean(values)) for top_n, values in scores.items()}
    if summary["no_words"]:
        log.warning(
            f"[annotation_eval] {len(summary['no_words'])} observation(s) have no words to predict"
        )
    log.info(f"[annotation_eval] evaluated={summary['evaluated']}, AP={summary['ap']}")
    return summary
