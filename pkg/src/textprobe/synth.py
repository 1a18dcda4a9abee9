"""Synthetic sphere-mixture tasks for verification and benchmarks.

A task draws K unit-norm class centers with pairwise cosine at most
1 - class_separation, then samples each split point as
normalize(center + (noise / sqrt(D)) g) with g standard normal, so
``noise`` is roughly the tangential perturbation magnitude. Text rows
are noisy copies of the centers, renormalized, so the text bank
carries real but imperfect class signal.

All randomness flows through one generator seeded by ``seed``; the
draw order (centers, text, support, validation, test, permutations)
is fixed, so identical seeds give identical tasks.
"""

import numpy as np

from .errors import InputError
from .optimizer import TaskSplit
from .types import FeatureMatrix, LabelVector, SupportSet, TextBank

MAX_CENTER_TRIES = 500


def _unit_rows(arr):
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def make_centers(rng, num_classes, dim, separation):
    """K unit centers with pairwise cosine <= 1 - separation.

    For 0 < separation < 1 (and room for K+1 orthonormal directions)
    the centers are built as sqrt(t) b + sqrt(1-t) u_k with t = 1 -
    separation, b a shared direction and u_k an orthonormal frame, so
    every pairwise cosine equals the allowed maximum exactly; small
    separations then give realistically overlapping classes instead of
    near-orthogonal ones. separation = 1 gives an orthonormal frame;
    anything else falls back to rejection sampling.
    """
    if num_classes < 2:
        raise InputError("need at least 2 classes")
    if dim < num_classes:
        raise InputError(f"need D >= K, got D={dim}, K={num_classes}")
    target = 1.0 - separation
    if abs(separation - 1.0) <= 1e-12:
        gauss = rng.standard_normal((dim, num_classes))
        q, _ = np.linalg.qr(gauss)
        return q.T[:num_classes].copy()
    if 0.0 < target < 1.0 and dim >= num_classes + 1:
        gauss = rng.standard_normal((dim, num_classes + 1))
        q, _ = np.linalg.qr(gauss)
        base = q[:, 0]
        frame = q[:, 1:].T
        return np.sqrt(target) * base[None, :] + np.sqrt(1.0 - target) * frame
    for _ in range(MAX_CENTER_TRIES):
        centers = _unit_rows(rng.standard_normal((num_classes, dim)))
        cos = centers @ centers.T
        np.fill_diagonal(cos, -np.inf)
        if cos.max() <= target + 1e-12:
            return centers
    raise InputError(
        f"could not place {num_classes} centers with separation "
        f"{separation} in {dim} dimensions"
    )


def _sample_split(rng, centers, per_class, noise):
    k, d = centers.shape
    n = per_class * k
    labels = np.repeat(np.arange(k), per_class)
    points = np.repeat(centers, per_class, axis=0)
    points = points + (noise / np.sqrt(d)) * rng.standard_normal((n, d))
    points = _unit_rows(points)
    order = rng.permutation(n)
    return points[order], labels[order]


def synth_task(
    seed,
    num_classes,
    shots,
    dim,
    class_separation=0.4,
    val_shots=None,
    test_shots=20,
    noise=0.8,
    text_noise=0.25,
):
    """Generate one task: (TaskSplit, TextBank).

    The validation split defaults to the same shot count as the
    support split. test_shots=0 omits the test split.
    """
    if num_classes < 2 or shots < 1 or dim < num_classes:
        raise InputError(
            f"need K >= 2, S >= 1, D >= K; got K={num_classes}, S={shots}, "
            f"D={dim}"
        )
    if val_shots is None:
        val_shots = shots
    if val_shots < 1:
        raise InputError("val_shots must be >= 1")
    if test_shots < 0:
        raise InputError("test_shots must be >= 0")
    rng = np.random.default_rng(seed)
    centers = make_centers(rng, num_classes, dim, class_separation)
    text = TextBank(
        _unit_rows(
            centers
            + (text_noise / np.sqrt(dim))
            * rng.standard_normal(centers.shape)
        )
    )
    sup_f, sup_y = _sample_split(rng, centers, shots, noise)
    val_f, val_y = _sample_split(rng, centers, val_shots, noise)
    support = SupportSet(
        FeatureMatrix(sup_f), LabelVector(sup_y, num_classes)
    )
    test_features = test_labels = None
    if test_shots > 0:
        test_f, test_y = _sample_split(rng, centers, test_shots, noise)
        test_features = FeatureMatrix(test_f)
        test_labels = LabelVector(test_y, num_classes)
    task = TaskSplit(
        support=support,
        val_features=FeatureMatrix(val_f),
        val_labels=LabelVector(val_y, num_classes),
        test_features=test_features,
        test_labels=test_labels,
    )
    return task, text
