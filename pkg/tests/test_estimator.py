"""Scikit-learn style estimator wrappers."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.utils.validation import check_is_fitted

from textprobe import BlendedLinearProbe, TrainingFreeProbe, synth_task
from textprobe.errors import InputError

from helpers import unit_rows


def task_arrays(seed=0, k=4, s=3, d=16):
    task, text = synth_task(seed, num_classes=k, shots=s, dim=d)
    return (
        task.support.features.data,
        task.support.labels.labels,
        task.test_features.data,
        task.test_labels.labels,
        text.data,
    )


def test_estimator_get_set_params_round_trip():
    x, y, _, _, text = task_arrays()
    est = BlendedLinearProbe(text_embeddings=text, budget=40, seed=3)
    params = est.get_params()
    assert params["budget"] == 40
    clone(est)  # sklearn clone requires unmodified constructor params
    est.set_params(budget=60)
    assert est.get_params()["budget"] == 60


def test_estimator_fit_predict_flow():
    x, y, xq, yq, text = task_arrays()
    est = BlendedLinearProbe(text_embeddings=text, budget=60)
    est.fit(x, y)
    check_is_fitted(est)
    assert est.w_.shape == (4, 16)
    assert est.alpha_.shape == (4,)
    assert est.n_features_in_ == 16
    np.testing.assert_array_equal(est.classes_, np.arange(4))
    pred = est.predict(xq)
    assert pred.shape == (xq.shape[0],)
    assert est.score(xq, yq) > 0.5
    scores = est.decision_function(xq)
    np.testing.assert_array_equal(pred, est.classes_[scores.argmax(axis=1)])


def test_estimator_maps_non_contiguous_labels():
    x, y, xq, _, text = task_arrays()
    shifted = y * 10 + 5  # labels {5, 15, 25, 35}
    est = BlendedLinearProbe(text_embeddings=text, budget=40)
    est.fit(x, shifted)
    np.testing.assert_array_equal(est.classes_, [5, 15, 25, 35])
    assert set(np.unique(est.predict(xq))) <= set(est.classes_.tolist())

    reference = BlendedLinearProbe(text_embeddings=text, budget=40)
    reference.fit(x, y)
    np.testing.assert_array_equal(
        est.predict(xq), reference.predict(xq) * 10 + 5
    )


def test_estimator_validation_split_is_used():
    task, text = synth_task(3, num_classes=4, shots=3, dim=16)
    x, y = task.support.features.data, task.support.labels.labels
    est = BlendedLinearProbe(text_embeddings=text.data, budget=40)
    est.fit(
        x,
        y,
        X_val=task.val_features.data,
        y_val=task.val_labels.labels,
    )
    assert len(est.report_.val_acc_trace) >= 2


def test_estimator_rejects_text_class_mismatch():
    x, y, _, _, text = task_arrays()
    est = BlendedLinearProbe(text_embeddings=text[:3])
    with pytest.raises(InputError):
        est.fit(x, y)
    with pytest.raises(InputError):
        BlendedLinearProbe(text_embeddings=None).fit(x, y)


def test_training_free_probe():
    x, y, xq, yq, text = task_arrays(seed=4)
    est = TrainingFreeProbe(text_embeddings=text)
    est.fit(x, y)
    pred = est.predict(xq)
    assert pred.shape == (xq.shape[0],)
    assert np.mean(pred == yq) > 1.0 / 4


def test_bcgd_strategy_coerces_iteration_counts():
    x, y, _, _, text = task_arrays(seed=5)
    est = BlendedLinearProbe(
        text_embeddings=text, strategy="bcgd", iter_w=10, iter_alpha=1, budget=30
    )
    est.fit(x, y)
    assert est.report_.metadata["iter_w"] == 1
    assert est.report_.metadata["iter_alpha"] == 1
