"""Blended cross-entropy objective and its closed-form block gradients.

Logits are l[i, k] = f_i . (w_k + alpha_k t_k). The K dot products
f_i . t_k are the dominant O(NKD) cost; they are computed once per
(features, text) pair via :func:`similarity` and threaded through
every consumer.
"""

import numpy as np

from .errors import DimensionError, NumericError
from .types import FeatureMatrix, SoftmaxCache, SupportSet, TextBank

# ln is clamped at this floor so a transient overflow at extreme
# logits yields a large finite loss instead of -inf.
P_FLOOR = 1e-300


def similarity(features, text):
    """N x K matrix of image-text dot products f_i . t_k."""
    if features.dim != text.dim:
        raise DimensionError(
            f"features dim {features.dim} != text dim {text.dim}"
        )
    return features.data @ text.data.T


def logits(features, text, params, sim=None):
    """N x K logit matrix f_i . w_k + alpha_k (f_i . t_k)."""
    if features.dim != params.dim or text.classes != params.num_classes:
        raise DimensionError(
            f"params ({params.num_classes}, {params.dim}) do not match "
            f"features dim {features.dim} / text classes {text.classes}"
        )
    if sim is None:
        sim = similarity(features, text)
    return features.data @ params.w.T + sim * params.alpha[None, :]


def softmax_rows(raw_logits):
    """Row-wise softmax, stabilized by subtracting each row maximum."""
    arr = np.asarray(raw_logits, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError("softmax input contains non-finite logits")
    shifted = arr - arr.max(axis=1, keepdims=True)
    p = np.exp(shifted)
    p /= p.sum(axis=1, keepdims=True)
    return SoftmaxCache(p, arr)


def loss_from_p(p, labels):
    """Mean negative log-probability of the true classes."""
    n = labels.n
    if p.shape[0] != n:
        raise DimensionError(f"p has {p.shape[0]} rows but labels has {n}")
    picked = p[np.arange(n), labels.labels]
    # + 0.0 normalizes the -0.0 that a perfectly fit support set yields.
    return float(-np.mean(np.log(np.maximum(picked, P_FLOOR))) + 0.0)


def loss(support, text, params, sim=None):
    """Blended cross-entropy L = -(1/N) sum_i ln p_{i, y_i}."""
    cache = softmax_rows(logits(support.features, text, params, sim=sim))
    return loss_from_p(cache.p, support.labels)


def _residual(cache, labels):
    """P - Y without materializing the one-hot matrix."""
    r = cache.p.copy()
    r[np.arange(labels.n), labels.labels] -= 1.0
    return r


def grad_w(support, text, params, cache=None, sim=None):
    """K x D gradient block: row k is (1/N) sum_i (p_ik - y_ik) f_i."""
    if cache is None:
        cache = softmax_rows(logits(support.features, text, params, sim=sim))
    r = _residual(cache, support.labels)
    return r.T @ support.features.data / support.n


def grad_alpha(support, text, params, cache=None, sim=None):
    """K-vector gradient block: g_k = (1/N) sum_i (p_ik - y_ik)(f_i . t_k)."""
    if sim is None:
        sim = similarity(support.features, text)
    if cache is None:
        cache = softmax_rows(logits(support.features, text, params, sim=sim))
    r = _residual(cache, support.labels)
    return (r * sim).sum(axis=0) / support.n


def evaluate(support, text, params, sim=None):
    """(loss, cache) pair sharing one softmax evaluation."""
    cache = softmax_rows(logits(support.features, text, params, sim=sim))
    return loss_from_p(cache.p, support.labels), cache
