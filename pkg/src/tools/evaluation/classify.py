from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from core import logger as log
from core.errors import EvaluationError
from tools.evaluation.latent import LatentMatrix

log = log.get_logger()


@dataclass(frozen=True, eq=False)
class ClassificationResult:
    accuracy: float
    labels: List[str]  # row/column order of the confusion matrix
    confusion: np.ndarray  # true label x predicted label counts
    predictions: Dict[str, str]

    @property
    def error(self) -> float:
        return 1.0 - self.accuracy


def nearest_centroid_eval(
    latents: LatentMatrix,
    labels: Mapping[str, str],
    split: Tuple[Sequence[str], Sequence[str]],
) -> ClassificationResult:
    """Assign each test item to the closest training-label centroid (Euclidean).

    Labels are ordered alphabetically; a distance tie goes to the earlier label.
    """
    train_ids, test_ids = list(split[0]), list(split[1])
    if not train_ids or not test_ids:
        raise EvaluationError("Classification needs training and test items")
    unlabeled = [i for i in train_ids + test_ids if i not in labels]
    if unlabeled:
        raise EvaluationError(f"{len(unlabeled)} ids have no label, e.g. {unlabeled[:3]}")
    classes = sorted({labels[i] for i in train_ids})
    unseen = sorted({labels[i] for i in test_ids} - set(classes))
    if unseen:
        raise EvaluationError(f"Test labels never seen in training: {unseen}")

    train = latents.subset(train_ids)
    test = latents.subset(test_ids)
    train_labels = np.array([labels[i] for i in train_ids], dtype=object)
    centroids = np.array([train.rows[train_labels == c].mean(axis=0) for c in classes])
    distances = ((test.rows[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    predicted = np.argmin(distances, axis=1)

    column = {c: k for k, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    predictions = {}
    for doc_id, k in zip(test_ids, predicted):
        confusion[column[labels[doc_id]], k] += 1
        predictions[doc_id] = classes[k]
    accuracy = float(np.trace(confusion) / len(test_ids))
    log.info(f"[nearest_centroid_eval] {len(test_ids)} test items, accuracy {accuracy:.4f}")
    return ClassificationResult(
        accuracy=accuracy, labels=classes, confusion=confusion, predictions=predictions
    )


def classification_error(
    latents: LatentMatrix,
    labels: Mapping[str, str],
    split: Tuple[Sequence[str], Sequence[str]],
) -> float:
    return nearest_centroid_eval(latents, labels, split).error
