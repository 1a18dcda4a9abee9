"""Built-in self-checks behind the `check` CLI subcommand.

These are quick randomized verifications of the core numerical
contracts: analytic gradients against central finite differences, the
simplex eigenvalue bound, power iteration against the dense oracle,
and the per-step descent guarantee of the provable constants.
"""

import numpy as np

from .errors import InputError
from .objective import grad_alpha, grad_w, loss
from .optimizer import FitState, step_block_alpha, step_block_w
from .spectral import dense_gram_eigs, gershgorin_check, power_iteration_gram
from .stepsize import gamma_alpha, gamma_w
from .types import FeatureMatrix, LabelVector, ProbeParams, SupportSet, TextBank


def _unit_rows(arr):
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def random_instance(rng, n=None, k=None, d=None, param_scale=1.0):
    """Small random (support, text, params) triple with all classes hit."""
    k = k if k is not None else int(rng.integers(2, 9))
    n = n if n is not None else int(rng.integers(k, 33))
    d = d if d is not None else int(rng.integers(max(2, k), 17))
    if n < k:
        raise InputError(f"need n >= k to cover every class, got n={n}, k={k}")
    features = FeatureMatrix(_unit_rows(rng.standard_normal((n, d))))
    text = TextBank(_unit_rows(rng.standard_normal((k, d))))
    labels = np.concatenate(
        [np.arange(k), rng.integers(0, k, size=n - k)]
    )[:n]
    rng.shuffle(labels)
    support = SupportSet(features, LabelVector(labels, k))
    params = ProbeParams(
        param_scale * rng.standard_normal((k, d)) / np.sqrt(d),
        param_scale * rng.standard_normal(k),
    )
    return support, text, params


def finite_diff_grads(support, text, params, h=1e-5):
    """Central-difference gradients of the loss in (w, alpha)."""
    k, d = params.num_classes, params.dim
    gw = np.zeros((k, d))
    for row in range(k):
        for col in range(d):
            up = params.copy()
            up.w[row, col] += h
            down = params.copy()
            down.w[row, col] -= h
            gw[row, col] = (
                loss(support, text, up) - loss(support, text, down)
            ) / (2 * h)
    ga = np.zeros(k)
    for row in range(k):
        up = params.copy()
        up.alpha[row] += h
        down = params.copy()
        down.alpha[row] -= h
        ga[row] = (loss(support, text, up) - loss(support, text, down)) / (2 * h)
    return gw, ga


def _rel_err(approx, exact):
    scale = max(float(np.max(np.abs(exact))), 1e-12)
    return float(np.max(np.abs(approx - exact))) / scale


def gradient_check(trials=10, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        support, text, params = random_instance(rng)
        fd_w, fd_a = finite_diff_grads(support, text, params)
        worst = max(
            worst,
            _rel_err(fd_w, grad_w(support, text, params)),
            _rel_err(fd_a, grad_alpha(support, text, params)),
        )
    return {"name": "gradient-check", "passed": worst < tol, "worst": worst}


def gershgorin_draws(trials=200, seed=0):
    rng = np.random.default_rng(seed)
    low, high = np.inf, -np.inf
    for _ in range(trials):
        k = int(rng.integers(2, 11))
        p = rng.dirichlet(np.ones(k))
        lo, hi = gershgorin_check(p)
        low, high = min(low, lo), max(high, hi)
    passed = low >= -1e-10 and high <= 0.5 + 1e-10
    return {"name": "gershgorin", "passed": passed, "min": low, "max": high}


def eigen_agreement(trials=5, seed=0, tol=1e-8):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(8, 101))
        d = int(rng.integers(4, 33))
        features = FeatureMatrix(_unit_rows(rng.standard_normal((n, d))))
        spectrum = power_iteration_gram(features, tol=1e-13, max_iter=5000)
        dense_top = float(dense_gram_eigs(features)[0])
        worst = max(worst, abs(spectrum.lambda_max - dense_top) / dense_top)
    return {"name": "eigen-oracle", "passed": worst < tol, "worst": worst}


def descent_draws(trials=50, seed=0):
    rng = np.random.default_rng(seed)
    margin = np.inf
    for trial in range(trials):
        support, text, params = random_instance(rng, param_scale=2.0)
        gw = gamma_w(support.features, tau1=2.0)
        ga = gamma_alpha(support.features, text, tau2=2.0)
        use_w = trial % 2 == 0
        state = FitState(support, text, params.copy())
        before = state.loss
        if use_w:
            grad = grad_w(support, text, params)
            step_block_w(state, gw)
            required = float(np.sum(grad * grad)) / (2 * gw)
        else:
            grad = grad_alpha(support, text, params)
            step_block_alpha(state, ga)
            required = float(np.sum(grad * grad)) / (2 * ga)
        margin = min(margin, (before - state.loss) - required)
    return {"name": "descent", "passed": margin >= -1e-10, "margin": margin}


def run_all(seed=0):
    """Run every self-check; returns a list of result dicts."""
    return [
        gradient_check(seed=seed),
        gershgorin_draws(seed=seed),
        eigen_agreement(seed=seed),
        descent_draws(seed=seed),
    ]
