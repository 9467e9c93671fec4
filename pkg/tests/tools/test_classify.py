import numpy as np
import pytest

from core.errors import EvaluationError
from core.parallel import make_rng
from tools.evaluation.classify import classification_error, nearest_centroid_eval
from tools.evaluation.latent import LatentMatrix


def _clouds(rng, centers, per_class, spread):
    rows, ids, labels = [], [], {}
    for c, center in enumerate(centers):
        for n in range(per_class):
            doc_id = f"c{c}-{n:03d}"
            rows.append(np.asarray(center) + spread * rng.standard_normal(len(center)))
            ids.append(doc_id)
            labels[doc_id] = f"class{c}"
    return LatentMatrix(rows=np.array(rows), ids=ids), labels


# =====================================================
# Nearest centroid
# =====================================================


def test_separated_clouds_are_classified_perfectly():
    latents, labels = _clouds(make_rng(1), [[5.0, 0.0], [-5.0, 0.0], [0.0, 5.0]], 20, 0.3)
    train_ids = [i for i in latents.ids if int(i[-3:]) < 15]
    test_ids = [i for i in latents.ids if int(i[-3:]) >= 15]
    result = nearest_centroid_eval(latents, labels, (train_ids, test_ids))
    assert result.accuracy == 1.0
    assert result.labels == ["class0", "class1", "class2"]
    assert np.array_equal(result.confusion, np.diag([5, 5, 5]))
    assert classification_error(latents, labels, (train_ids, test_ids)) == 0.0


def test_identical_latents_fall_back_to_first_label():
    ids = [f"d{n}" for n in range(8)]
    latents = LatentMatrix(rows=np.ones((8, 2)), ids=ids)
    labels = {doc_id: ("b" if n % 4 else "a") for n, doc_id in enumerate(ids)}
    result = nearest_centroid_eval(latents, labels, (ids[:4], ids[4:]))
    # Every test item goes to "a"; one of the four test items is labelled "a".
    assert set(result.predictions.values()) == {"a"}
    assert result.accuracy == pytest.approx(0.25)


def test_matches_brute_force_centroids():
    rng = make_rng(2)
    latents, labels = _clouds(rng, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 25, 1.0)
    ids = latents.ids
    train_ids, test_ids = ids[::2], ids[1::2]
    centroids = {}
    for label in ("class0", "class1"):
        members = [latents.row(i) for i in train_ids if labels[i] == label]
        centroids[label] = np.mean(members, axis=0)
    expected = {
        i: min(centroids, key=lambda c: np.sum((latents.row(i) - centroids[c]) ** 2))
        for i in test_ids
    }
    result = nearest_centroid_eval(latents, labels, (train_ids, test_ids))
    assert result.predictions == expected
    correct = sum(expected[i] == labels[i] for i in test_ids)
    assert result.accuracy == pytest.approx(correct / len(test_ids))
    assert result.confusion.sum() == len(test_ids)


# =====================================================
# Errors
# =====================================================


def test_unseen_test_label_is_an_error():
    latents = LatentMatrix(rows=np.eye(3), ids=["a", "b", "c"])
    labels = {"a": "x", "b": "x", "c": "y"}
    with pytest.raises(EvaluationError):
        nearest_centroid_eval(latents, labels, (["a", "b"], ["c"]))


def test_empty_split_is_an_error():
    latents = LatentMatrix(rows=np.eye(2), ids=["a", "b"])
    with pytest.raises(EvaluationError):
        nearest_centroid_eval(latents, {"a": "x", "b": "x"}, (["a", "b"], []))


def test_unlabelled_item_is_an_error():
    latents = LatentMatrix(rows=np.eye(2), ids=["a", "b"])
    with pytest.raises(EvaluationError):
        nearest_centroid_eval(latents, {"a": "x"}, (["a"], ["b"]))
