"""Prediction, accuracy, and the training-free predictor."""

import numpy as np

from .errors import DimensionError
from .initialization import init_alpha_hard, init_w_hard
from .objective import logits, similarity
from .types import LabelVector, ProbeParams


def predict(features, text, params):
    """Per-row argmax of the blended logits; ties go to the lowest index."""
    scores = logits(features, text, params)
    # np.argmax already returns the first maximizer of each row.
    return LabelVector(np.argmax(scores, axis=1), text.classes)


def training_free_predict(task, text, queries):
    """Classify queries using the hard-mean initialization directly.

    No optimization step is taken: w0 is the per-class feature sum and
    alpha0 the 250/S-scaled similarity sum. ``task`` may be a TaskSplit
    or a bare SupportSet.
    """
    support = getattr(task, "support", task)
    sim = similarity(support.features, text)
    params = ProbeParams(
        init_w_hard(support), init_alpha_hard(support, text, sim=sim)
    )
    return predict(queries, text, params)


def accuracy(pred, truth):
    """Fraction of exact matches between two label vectors."""
    p = pred.labels if isinstance(pred, LabelVector) else np.asarray(pred)
    t = truth.labels if isinstance(truth, LabelVector) else np.asarray(truth)
    if p.shape != t.shape:
        raise DimensionError(
            f"prediction length {p.shape} != truth length {t.shape}"
        )
    return float(np.mean(p == t))
