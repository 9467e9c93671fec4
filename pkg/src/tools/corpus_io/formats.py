"""Tab-separated text formats for corpora, splits, latents and result files.

Text file:    optional `#vocab w1 w2 ...` header, then `id<TAB>word:count word:count ...`
              where word is a vocabulary token or a 0-based integer index.
Image file:   optional `#bins b1 b2 ...` header, then `id<TAB>v1,v2,...,vK`.
Labels file:  `id<TAB>label`.
Split file:   `id<TAB>train|test` (`index` and `query` are accepted as aliases).
Latent file:  `id<TAB>g1,...,gJ`.
"""

import os
from typing import Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

import config
from core import logger as log
from core.corpus import Corpus
from core.errors import CorpusFormatError
from tools.evaluation.latent import LatentMatrix
from tools.trainer.train import TrainReport

log = log.get_logger()

SPLIT_ALIASES = {"train": "train", "index": "train", "test": "test", "query": "test"}


def _number(value: float) -> str:
    return format(float(value), ".17g")


def _lines(path) -> Iterator[Tuple[int, str]]:
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield line_number, line


def _split_id(path, line_number: int, line: str) -> Tuple[str, str]:
    doc_id, sep, rest = line.partition("\t")
    if not sep or not doc_id:
        raise CorpusFormatError(path, line_number, "expected 'id<TAB>...'")
    return doc_id, rest


def _check_tokens(path, kind: str, tokens: Sequence[str]) -> None:
    bad = [t for t in tokens if not t or any(c.isspace() for c in t)]
    if bad:
        raise CorpusFormatError(
            path, None, f"{kind} tokens must be non-empty without spaces: {bad}"
        )


# =====================================================
# Corpus
# =====================================================


def _parse_text(path):
    vocab: Optional[List[str]] = None
    rows: List[Tuple[str, str, int]] = []
    for line_number, line in _lines(path):
        if line.startswith(config.VOCAB_HEADER):
            if vocab is not None or rows:
                raise CorpusFormatError(path, line_number, "vocabulary header must come first")
            vocab = line[len(config.VOCAB_HEADER) :].split()
            continue
        doc_id, rest = _split_id(path, line_number, line)
        rows.append((doc_id, rest, line_number))

    lookup = {word: i for i, word in enumerate(vocab or [])}
    parsed = []
    highest = -1
    for doc_id, rest, line_number in rows:
        words: Dict[int, int] = {}
        for entry in rest.split():
            token, sep, count = entry.rpartition(":")
            if not sep:
                token, count = entry, "1"
            try:
                n = int(count)
            except ValueError:
                raise CorpusFormatError(path, line_number, f"malformed count in '{entry}'")
            if n < 0:
                raise CorpusFormatError(path, line_number, f"negative count in '{entry}'")
            if token in lookup:
                i = lookup[token]
            else:
                try:
                    i = int(token)
                except ValueError:
                    raise CorpusFormatError(path, line_number, f"unknown word '{token}'")
                if i < 0 or (vocab is not None and i >= len(vocab)):
                    raise CorpusFormatError(path, line_number, f"word index {i} out of range")
            words[i] = words.get(i, 0) + n
            highest = max(highest, i)
        parsed.append((doc_id, words, line_number))
    if vocab is None:
        vocab = [str(i) for i in range(highest + 1)]
    return vocab, parsed


def load_vocab(path) -> List[str]:
    vocab, _ = _parse_text(path)
    return vocab


def load_image_vectors(path) -> Tuple[List[str], np.ndarray, List[str]]:
    """Returns (ids, K-column matrix, bin labels)."""
    bins: Optional[List[str]] = None
    ids: List[str] = []
    values: List[List[float]] = []
    seen = set()
    for line_number, line in _lines(path):
        if line.startswith(config.BINS_HEADER):
            if bins is not None or ids:
                raise CorpusFormatError(path, line_number, "bin header must come first")
            bins = line[len(config.BINS_HEADER) :].split()
            continue
        doc_id, rest = _split_id(path, line_number, line)
        if doc_id in seen:
            raise CorpusFormatError(path, line_number, f"duplicate id '{doc_id}'")
        seen.add(doc_id)
        try:
            row = [float(v) for v in rest.split(",")] if rest.strip() else []
        except ValueError:
            raise CorpusFormatError(path, line_number, f"malformed image vector '{rest}'")
        if not np.all(np.isfinite(row)):
            raise CorpusFormatError(path, line_number, "image values must be finite")
        width = len(bins) if bins is not None else (len(values[0]) if values else len(row))
        if len(row) != width:
            raise CorpusFormatError(path, line_number, f"expected {width} values, got {len(row)}")
        ids.append(doc_id)
        values.append(row)
    if bins is None:
        bins = [f"b{k}" for k in range(len(values[0]) if values else 0)]
    Z = np.array(values, dtype=float).reshape(len(ids), len(bins))
    return ids, Z, bins


def load_labels(path) -> Dict[str, str]:
    labels: Dict[str, str] = {}
    for line_number, line in _lines(path):
        doc_id, label = _split_id(path, line_number, line)
        if doc_id in labels:
            raise CorpusFormatError(path, line_number, f"duplicate id '{doc_id}'")
        if not label.strip():
            raise CorpusFormatError(path, line_number, "empty label")
        labels[doc_id] = label.strip()
    return labels


def load_corpus(text_path, image_path, labels_path=None) -> Corpus:
    log.info(f"📂 [load_corpus] reading {text_path} and {image_path}")
    vocab, parsed = _parse_text(text_path)
    image_ids, Z_rows, bins = load_image_vectors(image_path)
    image_index = {doc_id: n for n, doc_id in enumerate(image_ids)}

    ids, rows, cols, data = [], [], [], []
    seen = set()
    for n, (doc_id, words, line_number) in enumerate(parsed):
        if doc_id in seen:
            raise CorpusFormatError(text_path, line_number, f"duplicate id '{doc_id}'")
        if doc_id not in image_index:
            raise CorpusFormatError(image_path, None, f"no image for id '{doc_id}'")
        seen.add(doc_id)
        ids.append(doc_id)
        for i, count in sorted(words.items()):
            rows.append(n)
            cols.append(i)
            data.append(count)
    extra = [doc_id for doc_id in image_ids if doc_id not in seen]
    if extra:
        raise CorpusFormatError(image_path, None, f"images without text: {extra[:5]}")

    labels = None
    if labels_path is not None:
        label_map = load_labels(labels_path)
        missing = [doc_id for doc_id in ids if doc_id not in label_map]
        if missing:
            raise CorpusFormatError(labels_path, None, f"no label for ids {missing[:5]}")
        extra = [doc_id for doc_id in label_map if doc_id not in seen]
        if extra:
            raise CorpusFormatError(labels_path, None, f"labels for unknown ids {extra[:5]}")
        labels = [label_map[doc_id] for doc_id in ids]

    coords = (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))
    X = sp.csr_matrix(
        (np.array(data, dtype=np.int64), coords), shape=(len(ids), len(vocab))
    )
    Z = Z_rows[[image_index[doc_id] for doc_id in ids]] if ids else np.zeros((0, len(bins)))
    corpus = Corpus(X=X, Z=Z, vocab=vocab, bin_labels=bins, ids=ids, labels=labels)
    log.info(f"[load_corpus] N={len(corpus)}, M={corpus.M}, K={corpus.K}")
    return corpus


def save_corpus(corpus: Corpus, text_path, image_path, labels_path=None) -> None:
    _check_tokens(text_path, "vocabulary", corpus.vocab)
    _check_tokens(image_path, "bin", corpus.bin_labels)
    with open(text_path, "w", encoding="utf-8") as f:
        f.write(" ".join([config.VOCAB_HEADER] + corpus.vocab) + "\n")
        for n, doc_id in enumerate(corpus.ids):
            row = corpus.X[n]
            entries = [
                f"{corpus.vocab[i]}:{int(c)}" for i, c in sorted(zip(row.indices, row.data)) if c
            ]
            f.write(f"{doc_id}\t{' '.join(entries)}\n")
    with open(image_path, "w", encoding="utf-8") as f:
        f.write(" ".join([config.BINS_HEADER] + corpus.bin_labels) + "\n")
        for doc_id, z in zip(corpus.ids, corpus.Z):
            f.write(f"{doc_id}\t{','.join(_number(v) for v in z)}\n")
    if labels_path is not None:
        if corpus.labels is None:
            raise ValueError("Corpus has no labels to save")
        with open(labels_path, "w", encoding="utf-8") as f:
            for doc_id, label in zip(corpus.ids, corpus.labels):
                f.write(f"{doc_id}\t{label}\n")
    log.info(f"💾 [save_corpus] wrote {len(corpus)} observations to {text_path}, {image_path}")


# =====================================================
# Splits and latents
# =====================================================


class Split(NamedTuple):
    train: List[str]
    test: List[str]

    @property
    def index(self) -> List[str]:
        return self.train

    @property
    def query(self) -> List[str]:
        return self.test


def load_split(path) -> Split:
    split = Split(train=[], test=[])
    seen = set()
    for line_number, line in _lines(path):
        doc_id, role = _split_id(path, line_number, line)
        role = SPLIT_ALIASES.get(role.strip().lower())
        if role is None:
            raise CorpusFormatError(
                path, line_number, f"role must be one of {sorted(SPLIT_ALIASES)}"
            )
        if doc_id in seen:
            raise CorpusFormatError(path, line_number, f"duplicate id '{doc_id}'")
        seen.add(doc_id)
        getattr(split, role).append(doc_id)
    log.info(f"[load_split] {len(split.train)} train/index, {len(split.test)} test/query ids")
    return split


def save_split(split: Split, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc_id in split.train:
            f.write(f"{doc_id}\ttrain\n")
        for doc_id in split.test:
            f.write(f"{doc_id}\ttest\n")


def save_latents(latents: LatentMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc_id, row in zip(latents.ids, latents.rows):
            f.write(f"{doc_id}\t{','.join(_number(v) for v in row)}\n")
    log.info(f"💾 [save_latents] wrote {len(latents)} rows (J={latents.J}) to {path}")


def load_latents(path) -> LatentMatrix:
    ids, rows, _ = load_image_vectors(path)
    return LatentMatrix(rows=rows, ids=ids)


# =====================================================
# Result files
# =====================================================


def write_plot_data(path, points: Sequence[Tuple[float, float]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("recall\tprecision\n")
        for recall, precision in points:
            f.write(f"{recall:.6f}\t{precision:.6f}\n")


def write_per_query_ap(path, per_query: Mapping[str, float]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("id\tap\n")
        for doc_id, ap in per_query.items():
            f.write(f"{doc_id}\t{ap:.6f}\n")


def save_ranked_words(path, rankings: Sequence[Tuple[str, Sequence[Tuple[str, float]]]]) -> None:
    """One line per image: `id<TAB>word:score word:score ...`, best first."""
    with open(path, "w", encoding="utf-8") as f:
        for doc_id, words in rankings:
            f.write(f"{doc_id}\t{' '.join(f'{w}:{_number(s)}' for w, s in words)}\n")


def write_table(path, rows: Sequence[Mapping]) -> None:
    """Tab-separated table with the first row's keys as header."""
    if not rows:
        raise ValueError("Nothing to write")
    columns = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(columns) + "\n")
        for row in rows:
            f.write("\t".join("" if row[c] is None else str(row[c]) for c in columns) + "\n")


def write_report(report: TrainReport, path) -> None:
    rows = report.as_rows()
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# started {report.started_at}, padded directions {report.padded_directions}\n")
        if rows:
            columns = list(rows[0].keys())
            f.write("\t".join(columns) + "\n")
            for row in rows:
                f.write("\t".join(str(row[c]) for c in columns) + "\n")
    log.info(f"💾 [write_report] {len(rows)} epoch rows to {os.path.basename(str(path))}")
