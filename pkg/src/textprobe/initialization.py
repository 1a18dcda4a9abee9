"""Data-informed initialization and the g1/g2 split used to verify it.

The blended cross-entropy L on the support set decomposes as
L = g1 + g2 with

    g1 = -(1/N) sum_ik y_ik l_ik + (lam/2) sum_k ||w_k||^2
    g2 =  (1/N) sum_i ln sum_j exp(l_ij) - (lam/2) sum_k ||w_k||^2

where the regularizer cancels in the sum. g1 is minimized in w_k by
the scaled hard class mean (1/(lam N)) sum_i y_ik f_i; the analogous
split over alpha (h1/h2 with multiplier beta) is minimized by
(1/(beta N)) sum_i y_ik (f_i . t_k). With lam = 1/N and the
beta = S/(250 N) rule these become the hard initialization

    w0_k = sum_i y_ik f_i          alpha0_k = (250/S) sum_i y_ik (f_i . t_k)
"""

import numpy as np

from .errors import DegenerateWeightError, EmptyClassError, InputError
from .objective import logits, similarity
from .types import InitConfig, ProbeParams

WEIGHT_FLOOR = 1e-12


def _class_counts_or_raise(support):
    counts = support.labels.class_counts()
    empty = np.nonzero(counts == 0)[0]
    if empty.size:
        raise EmptyClassError(
            f"class {int(empty[0])} has no support samples; hard means are "
            "undefined"
        )
    return counts


def init_w_hard(support):
    """Unnormalized per-class feature sums: w0_k = sum_i y_ik f_i."""
    _class_counts_or_raise(support)
    k, d = support.num_classes, support.features.dim
    w = np.zeros((k, d))
    np.add.at(w, support.labels.labels, support.features.data)
    return w


def init_alpha_hard(support, text, sim=None):
    """alpha0_k = (250/S) sum_i y_ik (f_i . t_k), S = shots per class."""
    _class_counts_or_raise(support)
    if sim is None:
        sim = similarity(support.features, text)
    own = sim[np.arange(support.n), support.labels.labels]
    sums = np.bincount(
        support.labels.labels, weights=own, minlength=support.num_classes
    )
    return (250.0 / support.shots) * sums


def soft_mean_w(support, cache):
    """Prediction-weighted class means: sum_i p_ik f_i / sum_i p_ik."""
    weights = cache.p.sum(axis=0)
    if np.any(weights < WEIGHT_FLOOR):
        k = int(np.argmin(weights))
        raise DegenerateWeightError(
            f"class {k} has total softmax weight {weights[k]:.3g}; the soft "
            "mean is undefined"
        )
    return (cache.p.T @ support.features.data) / weights[:, None]


def soft_mean_alpha(support, text, cache, sim=None):
    """Prediction-weighted means of the image-text similarities."""
    if sim is None:
        sim = similarity(support.features, text)
    weights = cache.p.sum(axis=0)
    if np.any(weights < WEIGHT_FLOOR):
        k = int(np.argmin(weights))
        raise DegenerateWeightError(
            f"class {k} has total softmax weight {weights[k]:.3g}; the soft "
            "mean is undefined"
        )
    return (cache.p * sim).sum(axis=0) / weights


def _label_logit_sum(support, text, params, sim=None):
    l = logits(support.features, text, params, sim=sim)
    return float(l[np.arange(support.n), support.labels.labels].sum())


def g1_value(support, text, params, lam):
    """Linear-plus-regularizer half of the loss split."""
    if lam <= 0:
        raise InputError(f"lam must be positive, got {lam}")
    linear = -_label_logit_sum(support, text, params) / support.n
    return linear + 0.5 * lam * float(np.sum(params.w * params.w))


def g2_value(support, text, params, lam):
    """Log-sum-exp half; g1 + g2 equals the loss for any params."""
    if lam <= 0:
        raise InputError(f"lam must be positive, got {lam}")
    l = logits(support.features, text, params)
    row_max = l.max(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(np.exp(l - row_max).sum(axis=1))
    return float(lse.mean()) - 0.5 * lam * float(np.sum(params.w * params.w))


def h1_value(support, text, params, beta, sim=None):
    """alpha analogue of g1, regularizing alpha with multiplier beta."""
    if beta <= 0:
        raise InputError(f"beta must be positive, got {beta}")
    linear = -_label_logit_sum(support, text, params, sim=sim) / support.n
    return linear + 0.5 * beta * float(np.sum(params.alpha * params.alpha))


def h2_value(support, text, params, beta, sim=None):
    """alpha analogue of g2; h1 + h2 equals the loss for any params."""
    if beta <= 0:
        raise InputError(f"beta must be positive, got {beta}")
    l = logits(support.features, text, params, sim=sim)
    row_max = l.max(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(np.exp(l - row_max).sum(axis=1))
    return float(lse.mean()) - 0.5 * beta * float(
        np.sum(params.alpha * params.alpha)
    )


def g1_argmin_w(support, lam):
    """Closed-form minimizer of g1 over w: (1/(lam N)) sum_i y_ik f_i."""
    if lam <= 0:
        raise InputError(f"lam must be positive, got {lam}")
    return init_w_hard(support) / (lam * support.n)


def h1_argmin_alpha(support, text, beta, sim=None):
    """Closed-form minimizer of h1 over alpha: (1/(beta N)) sum_i y_ik s_ik."""
    if beta <= 0:
        raise InputError(f"beta must be positive, got {beta}")
    if sim is None:
        sim = similarity(support.features, text)
    own = sim[np.arange(support.n), support.labels.labels]
    sums = np.bincount(
        support.labels.labels, weights=own, minlength=support.num_classes
    )
    return sums / (beta * support.n)


def random_params(num_classes, dim, rng):
    """Random baseline: w entries N(0, 1/D) so initial logits are O(1)."""
    w = rng.standard_normal((num_classes, dim)) / np.sqrt(dim)
    return ProbeParams(w, np.zeros(num_classes))


def zero_params(num_classes, dim):
    """All-zero start; the loss there is exactly ln K."""
    return ProbeParams(np.zeros((num_classes, dim)), np.zeros(num_classes))


def init_params(support, text, config=None, rng=None, sim=None):
    """Build starting ProbeParams per the requested mode.

    hard-mean with a custom (lam, beta) uses the general closed forms
    (1/(lam N)) sum y f and (1/(beta N)) sum y s; the defaults
    reproduce init_w_hard / init_alpha_hard exactly.
    """
    if config is None:
        config = InitConfig()
    k, d = support.num_classes, support.features.dim
    if text.classes != k:
        raise InputError(
            f"text bank has {text.classes} classes but labels name {k}"
        )
    if config.mode == "zero":
        return zero_params(k, d)
    if config.mode == "random":
        if rng is None:
            rng = np.random.default_rng()
        return random_params(k, d, rng)
    lam, beta = config.resolve(support.n, support.shots)
    w = init_w_hard(support) / (lam * support.n)
    alpha = h1_argmin_alpha(support, text, beta, sim=sim)
    return ProbeParams(w, alpha)
