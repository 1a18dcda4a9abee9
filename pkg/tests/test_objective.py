"""Loss and gradient correctness against loop and finite-difference oracles."""

import math

import numpy as np
import pytest

from textprobe import (
    grad_alpha,
    grad_w,
    logits,
    loss,
    softmax_rows,
)
from textprobe.errors import NumericError
from textprobe.initialization import zero_params
from textprobe.objective import evaluate, similarity

from helpers import random_probe_params, random_support, random_text, unit_rows


def naive_loss(support, text, params):
    """Blended cross-entropy computed with explicit python loops."""
    f = support.features.data
    t = text.data
    n, k = support.n, text.classes
    total = 0.0
    for i in range(n):
        row = np.empty(k)
        for j in range(k):
            row[j] = float(np.dot(f[i], params.w[j] + params.alpha[j] * t[j]))
        row = row - row.max()
        p = np.exp(row)
        p = p / p.sum()
        total -= math.log(p[support.labels.labels[i]])
    return total / n


def naive_grads(support, text, params):
    """Closed-form gradients accumulated sample by sample."""
    f = support.features.data
    t = text.data
    n, k, d = support.n, text.classes, text.dim
    gw = np.zeros((k, d))
    ga = np.zeros(k)
    for i in range(n):
        row = np.array(
            [float(np.dot(f[i], params.w[j] + params.alpha[j] * t[j])) for j in range(k)]
        )
        row = row - row.max()
        p = np.exp(row)
        p = p / p.sum()
        for j in range(k):
            r = p[j] - (1.0 if support.labels.labels[i] == j else 0.0)
            gw[j] += r * f[i]
            ga[j] += r * float(np.dot(f[i], t[j]))
    return gw / n, ga / n


def finite_diff(support, text, params, h=1e-6):
    """Central differences of the loss in every parameter coordinate."""
    k, d = params.num_classes, params.dim
    gw = np.zeros((k, d))
    ga = np.zeros(k)
    for j in range(k):
        for c in range(d):
            plus = params.copy()
            plus.w[j, c] += h
            minus = params.copy()
            minus.w[j, c] -= h
            gw[j, c] = (loss(support, text, plus) - loss(support, text, minus)) / (
                2 * h
            )
        plus = params.copy()
        plus.alpha[j] += h
        minus = params.copy()
        minus.alpha[j] -= h
        ga[j] = (loss(support, text, plus) - loss(support, text, minus)) / (2 * h)
    return gw, ga


def test_loss_matches_loop_oracle():
    rng = np.random.default_rng(10)
    for _ in range(10):
        support = random_support(rng, 12, 4, 6)
        text = random_text(rng, 4, 6)
        params = random_probe_params(rng, 4, 6)
        np.testing.assert_allclose(
            loss(support, text, params), naive_loss(support, text, params), rtol=1e-12
        )


def test_grads_match_loop_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        support = random_support(rng, 10, 3, 5)
        text = random_text(rng, 3, 5)
        params = random_probe_params(rng, 3, 5)
        gw_ref, ga_ref = naive_grads(support, text, params)
        np.testing.assert_allclose(
            grad_w(support, text, params), gw_ref, rtol=1e-10, atol=1e-14
        )
        np.testing.assert_allclose(
            grad_alpha(support, text, params), ga_ref, rtol=1e-10, atol=1e-14
        )


def test_grads_match_finite_differences():
    rng = np.random.default_rng(12)
    for _ in range(5):
        support = random_support(rng, 9, 3, 4)
        text = random_text(rng, 3, 4)
        params = random_probe_params(rng, 3, 4)
        gw_fd, ga_fd = finite_diff(support, text, params)
        gw = grad_w(support, text, params)
        ga = grad_alpha(support, text, params)
        scale_w = np.maximum(np.abs(gw_fd), 1e-3)
        scale_a = np.maximum(np.abs(ga_fd), 1e-3)
        assert np.max(np.abs(gw - gw_fd) / scale_w) < 1e-6
        assert np.max(np.abs(ga - ga_fd) / scale_a) < 1e-6


def test_loss_at_zero_params_is_log_k():
    rng = np.random.default_rng(13)
    for k in (2, 10, 100):
        support = random_support(rng, max(2 * k, 8), k, 32)
        text = random_text(rng, k, 32)
        value = loss(support, text, zero_params(k, 32))
        assert abs(value - math.log(k)) <= 1e-12


def test_softmax_translation_invariance():
    rng = np.random.default_rng(14)
    raw = rng.standard_normal((8, 5))
    shifted = raw + rng.standard_normal((8, 1))  # per-row constant shift
    np.testing.assert_allclose(
        softmax_rows(raw).p, softmax_rows(shifted).p, rtol=0, atol=1e-14
    )
    np.testing.assert_allclose(softmax_rows(raw).p.sum(axis=1), 1.0, atol=1e-12)


def test_softmax_rejects_nonfinite():
    with pytest.raises(NumericError):
        softmax_rows(np.array([[0.0, np.nan]]))


def test_loss_is_convex_along_segments():
    rng = np.random.default_rng(15)
    support = random_support(rng, 16, 4, 8)
    text = random_text(rng, 4, 8)
    for _ in range(20):
        a = random_probe_params(rng, 4, 8, scale=1.0)
        b = random_probe_params(rng, 4, 8, scale=1.0)
        mid = a.copy()
        mid.w = 0.5 * (a.w + b.w)
        mid.alpha = 0.5 * (a.alpha + b.alpha)
        lhs = loss(support, text, mid)
        rhs = 0.5 * (loss(support, text, a) + loss(support, text, b))
        assert lhs <= rhs + 1e-12


def test_alpha_zero_reduces_to_plain_cross_entropy():
    # with alpha = 0 the objective is ordinary multinomial logistic CE;
    # the oracle uses logaddexp reduction, a different code path entirely
    rng = np.random.default_rng(16)
    support = random_support(rng, 14, 5, 7)
    text = random_text(rng, 5, 7)
    w = rng.standard_normal((5, 7))
    params = random_probe_params(rng, 5, 7)
    params.w[:] = w
    params.alpha[:] = 0.0

    raw = support.features.data @ w.T
    lse = np.logaddexp.reduce(raw, axis=1)
    ce = float(np.mean(lse - raw[np.arange(support.n), support.labels.labels]))
    np.testing.assert_allclose(loss(support, text, params), ce, rtol=1e-12)


def test_saturated_loss_is_plus_zero():
    # perfect separation underflows to an exact 0.0, never -0.0
    from textprobe import FeatureMatrix, LabelVector, SupportSet, TextBank

    eye = np.eye(4)
    support = SupportSet(FeatureMatrix(eye), LabelVector([0, 1, 2, 3], 4))
    text = TextBank(eye)
    params = random_probe_params(np.random.default_rng(18), 4, 4)
    params.w[:] = 800.0 * eye
    params.alpha[:] = 0.0
    value = loss(support, text, params)
    assert value == 0.0
    assert math.copysign(1.0, value) == 1.0


def test_evaluate_returns_consistent_cache():
    rng = np.random.default_rng(19)
    support = random_support(rng, 12, 3, 6)
    text = random_text(rng, 3, 6)
    params = random_probe_params(rng, 3, 6)
    value, cache = evaluate(support, text, params)
    np.testing.assert_allclose(value, loss(support, text, params), rtol=1e-15)
    np.testing.assert_allclose(
        cache.logits, logits(support.features, text, params), atol=1e-15
    )
    np.testing.assert_allclose(cache.p, softmax_rows(cache.logits).p, atol=1e-15)
    np.testing.assert_array_equal(
        similarity(support.features, text), support.features.data @ text.data.T
    )
