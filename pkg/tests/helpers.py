"""Shared random-instance builders for the test suite.

Everything is driven by an explicit np.random.Generator so each test
controls its own seed and stays reproducible in isolation.
"""

import numpy as np

from textprobe import (
    FeatureMatrix,
    LabelVector,
    ProbeParams,
    SupportSet,
    TextBank,
)
from textprobe.optimizer import TaskSplit


def unit_rows(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def labels_covering(rng, n, k):
    # every class appears at least once; needs n >= k
    lab = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(lab)
    return lab


def random_support(rng, n, k, d):
    features = FeatureMatrix(unit_rows(rng, n, d))
    labels = LabelVector(labels_covering(rng, n, k), k)
    return SupportSet(features, labels)


def random_text(rng, k, d):
    return TextBank(unit_rows(rng, k, d))


def random_probe_params(rng, k, d, scale=0.5):
    return ProbeParams(
        scale * rng.standard_normal((k, d)), scale * rng.standard_normal(k)
    )


def random_task(rng, n, k, d, n_val=16):
    support = random_support(rng, n, k, d)
    val_features = FeatureMatrix(unit_rows(rng, n_val, d))
    val_labels = LabelVector(rng.integers(0, k, size=n_val), k)
    return TaskSplit(
        support=support, val_features=val_features, val_labels=val_labels
    )
