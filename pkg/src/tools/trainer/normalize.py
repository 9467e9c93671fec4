from typing import Dict, Tuple

import numpy as np

from core import logger as log
from core.corpus import Corpus

log = log.get_logger()


def normalize_features(corpus: Corpus) -> Tuple[Corpus, Dict]:
    """Rescale each image so its bin sum equals the document's word-count sum.

    Documents without words, or with a zero image sum next to a non-empty text,
    cannot be matched by a scale factor; they keep their image and are flagged.

    Returns the new corpus and a summary dict:
    {"scaled": int, "unchanged": int, "flagged": [ids]}
    """
    text_sums = np.asarray(corpus.X.sum(axis=1), dtype=float).ravel()
    image_sums = corpus.Z.sum(axis=1)
    Z = corpus.Z.copy()
    summary = {"scaled": 0, "unchanged": 0, "flagged": []}
    for n, (tx, im) in enumerate(zip(text_sums, image_sums)):
        if tx == 0 or im == 0:
            summary["flagged"].append(corpus.ids[n])
            continue
        if tx == im:
            summary["unchanged"] += 1
            continue
        Z[n] *= tx / im
        summary["scaled"] += 1
    if summary["flagged"]:
        log.warning(
            f"[normalize_features] {len(summary['flagged'])} observation(s) left unscaled: "
            f"{summary['flagged'][:5]}"
        )
    log.info(
        f"[normalize_features] scaled={summary['scaled']}, unchanged={summary['unchanged']}, "
        f"flagged={len(summary['flagged'])}"
    )
    return corpus.with_images(Z), summary
