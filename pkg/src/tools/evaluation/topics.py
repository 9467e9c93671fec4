from dataclasses import dataclass
from typing import List, Optional, Tuple

import config
from core import logger as log
from core.corpus import Corpus
from core.harmonium import HarmoniumParams
from tools.evaluation.latent import project
from tools.evaluation.ranking import top_indices

log = log.get_logger()


@dataclass(frozen=True)
class Topic:
    aspect: int
    words: List[Tuple[str, float]]  # (word, W_ij), strongest first
    documents: List[Tuple[str, float]]  # (id, gamma_j), strongest first


def topic_report(
    params: HarmoniumParams,
    corpus: Corpus,
    top_words: Optional[int] = None,
    top_docs: Optional[int] = None,
) -> List[Topic]:
    """Per aspect j: words by W_ij descending and documents by projected gamma_j
    descending, ties by ascending index."""
    top_words = config.TOPIC_TOP_WORDS if top_words is None else top_words
    top_docs = config.TOPIC_TOP_DOCS if top_docs is None else top_docs
    latents = project(params, corpus)
    topics = []
    for j in range(params.dims.J):
        column = params.W[:, j]
        words = [(corpus.vocab[i], float(column[i])) for i in top_indices(column, top_words)]
        gammas = latents.rows[:, j]
        docs = [(corpus.ids[n], float(gammas[n])) for n in top_indices(gammas, top_docs)]
        topics.append(Topic(aspect=j, words=words, documents=docs))
    log.info(f"[topic_report] {len(topics)} aspects, {top_words} words, {top_docs} documents")
    return topics


def format_topic_report(topics: List[Topic]) -> str:
    lines = []
    for topic in topics:
        lines.append(f"aspect {topic.aspect}")
        lines.append("  words: " + " ".join(f"{w}({s:.4g})" for w, s in topic.words))
        lines.append("  documents: " + " ".join(f"{d}({s:.4g})" for d, s in topic.documents))
    return "\n".join(lines) + "\n"
