"""Block majorize-minimize optimizer with fixed curvature constants.

Each outer cycle runs iter_w gradient steps on w (alpha frozen at its
cycle-start value) followed by iter_alpha steps on alpha (w frozen),
every step using the implicit rate 1/gamma of its block. The budget
counts every single variable update across all blocks. Minimizing the
quadratic majorizer of a block is exactly one such gradient step, so
with the provable constants (tau >= 2) every update decreases the
loss by at least ||grad||^2 / (2 gamma).

Logits are maintained incrementally: a w step costs two N x D x K
matrix products (gradient and logit delta), an alpha step is O(NK).
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, InputError, NumericError
from .initialization import init_params
from .objective import similarity
from .spectral import power_iteration_gram
from .stepsize import gamma_alpha, gamma_global, gamma_w
from .types import (
    CyclingConfig,
    FeatureMatrix,
    FitReport,
    InitConfig,
    LabelVector,
    SupportSet,
    TextBank,
)

ALPHA_MODES = ("learned", "zero", "one")


@dataclass(frozen=True)
class TaskSplit:
    """Support, validation, and optional test splits of one task."""

    support: SupportSet
    val_features: FeatureMatrix
    val_labels: LabelVector
    test_features: Optional[FeatureMatrix] = None
    test_labels: Optional[LabelVector] = None

    def __post_init__(self):
        d = self.support.features.dim
        k = self.support.num_classes
        pairs = [("validation", self.val_features, self.val_labels)]
        if self.test_features is not None or self.test_labels is not None:
            if self.test_features is None or self.test_labels is None:
                raise InputError("test features and labels must come together")
            pairs.append(("test", self.test_features, self.test_labels))
        for name, feats, labels in pairs:
            if feats.dim != d:
                raise DimensionError(
                    f"{name} dim {feats.dim} != support dim {d}"
                )
            if labels.num_classes != k:
                raise DimensionError(
                    f"{name} names {labels.num_classes} classes, support has {k}"
                )
            if feats.rows != labels.n:
                raise DimensionError(
                    f"{name} has {feats.rows} rows but {labels.n} labels"
                )


class FitState:
    """Mutable optimization state with incrementally maintained logits."""

    def __init__(self, support, text, params, sim=None):
        if text.classes != support.num_classes:
            raise DimensionError(
                f"text bank has {text.classes} classes, labels name "
                f"{support.num_classes}"
            )
        if text.dim != support.features.dim or params.dim != text.dim:
            raise DimensionError("feature, text, and params dims disagree")
        if params.num_classes != text.classes:
            raise DimensionError("params and text class counts disagree")
        self.support = support
        self.text = text
        self.params = params
        self.sim = similarity(support.features, text) if sim is None else sim
        self.logits = (
            support.features.data @ params.w.T + self.sim * params.alpha[None, :]
        )
        self._rows = np.arange(support.n)
        self._work = np.empty_like(self.logits)
        self.loss = 0.0
        self.residual = np.empty_like(self.logits)
        self._refresh()

    def _refresh(self):
        """Recompute softmax residual (P - Y) and the loss in one pass."""
        row_max = self.logits.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(row_max)):
            raise NumericError("logits became non-finite")
        np.subtract(self.logits, row_max, out=self._work)
        np.exp(self._work, out=self._work)
        sums = self._work.sum(axis=1, keepdims=True)
        np.divide(self._work, sums, out=self._work)
        picked = self._work[self._rows, self.support.labels.labels]
        self.loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))) + 0.0)
        self._work[self._rows, self.support.labels.labels] -= 1.0
        self.residual, self._work = self._work, self.residual

    def probabilities(self):
        """Current softmax matrix (reassembled from the residual)."""
        p = self.residual.copy()
        p[self._rows, self.support.labels.labels] += 1.0
        return p


def step_block_w(state, gamma):
    """One gradient step on the w block with rate 1/gamma."""
    f = state.support.features.data
    # overflow is caught by the explicit finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        grad = state.residual.T @ f
        grad /= state.support.n * gamma
        state.params.w -= grad
        state.logits -= f @ grad.T
    if not np.all(np.isfinite(state.params.w)):
        raise NumericError("w became non-finite after a block step")
    state._refresh()
    return state


def step_block_alpha(state, gamma):
    """One gradient step on the alpha block with rate 1/gamma."""
    with np.errstate(over="ignore", invalid="ignore"):
        grad = (state.residual * state.sim).sum(axis=0)
        grad /= state.support.n * gamma
        state.params.alpha -= grad
        state.logits -= state.sim * grad[None, :]
    if not np.all(np.isfinite(state.params.alpha)):
        raise NumericError("alpha became non-finite after a block step")
    state._refresh()
    return state


def step_joint(state, gamma, update_alpha=True):
    """One joint (w, alpha) step with the shared rate 1/gamma."""
    f = state.support.features.data
    with np.errstate(over="ignore", invalid="ignore"):
        grad_w = state.residual.T @ f
        grad_w /= state.support.n * gamma
        state.params.w -= grad_w
        delta = f @ grad_w.T
        if update_alpha:
            grad_a = (state.residual * state.sim).sum(axis=0)
            grad_a /= state.support.n * gamma
            state.params.alpha -= grad_a
            delta += state.sim * grad_a[None, :]
        state.logits -= delta
    if not (
        np.all(np.isfinite(state.params.w))
        and np.all(np.isfinite(state.params.alpha))
    ):
        raise NumericError("params became non-finite after a joint step")
    state._refresh()
    return state


def _validation_accuracy(params, text, features, labels):
    scores = features.data @ params.effective_weights(text).T
    return float(np.mean(np.argmax(scores, axis=1) == labels.labels))


def _adaptive_constants(state, tau1, tau2, tol=1e-10, max_iter=200):
    """Per-cycle curvature bounds from the current predictions.

    For sample i the softmax curvature factor is bounded by
    c_i = min(1/2, 2 max_k (p_ik - p_ik^2)); the w constant is then
    (tau1/N) lambda_max(sum_i c_i f_i f_i^T) (weighted power
    iteration, still O(ND) per matvec) and the alpha constant
    (tau2/N) sum_i c_i max_k (f_i . t_k)^2.
    """
    p = state.probabilities()
    m = (p - p * p).max(axis=1)
    c = np.minimum(0.5, 2.0 * m)
    f = state.support.features.data
    n, d = f.shape

    x = f.mean(axis=0)
    norm = np.linalg.norm(x)
    if norm < 1e-12:
        x = np.zeros(d)
        x[0] = 1.0
    else:
        x /= norm
    rayleigh = 0.0
    for _ in range(max_iter):
        z = f.T @ (c * (f @ x))
        new_rayleigh = float(x @ z)
        z_norm = np.linalg.norm(z)
        if z_norm < 1e-300:
            rayleigh = 0.0
            break
        x = z / z_norm
        if abs(new_rayleigh - rayleigh) <= tol * max(abs(new_rayleigh), 1e-300):
            rayleigh = new_rayleigh
            break
        rayleigh = new_rayleigh
    gw = tau1 * max(rayleigh, 1e-300) / n
    ga = tau2 * float((c * (state.sim * state.sim).max(axis=1)).sum()) / n
    return gw, max(ga, 1e-300)


def fit(
    task,
    text,
    cycling=None,
    init=None,
    tau1=1.0,
    tau2=16.0,
    tau=None,
    seed=None,
    lr=None,
    alpha_mode="learned",
    adaptive=False,
    power_tol=1e-10,
    power_max_iter=200,
):
    """Run the block optimizer on one task and report the whole trace.

    tau applies only to the gd strategy's global constant and defaults
    to 1 there (the ablation setting); tau >= 2 makes the joint step
    provably monotone. lr overrides the implicit 1/gamma rate and is
    only accepted with strategy gd. alpha_mode freezes alpha at 0 or 1
    (spending the entire budget on w) or leaves it learned.

    Validation accuracy is measured at initialization and after every
    outer cycle; the best snapshot is selected by highest accuracy,
    earliest on ties. The loss is recorded after every single update.
    """
    if not isinstance(task, TaskSplit):
        raise InputError("task must be a TaskSplit")
    if not isinstance(text, TextBank):
        raise InputError("text must be a TextBank")
    if text.classes < 2:
        raise InputError("fitting requires at least two classes")
    if alpha_mode not in ALPHA_MODES:
        raise InputError(f"alpha_mode must be one of {ALPHA_MODES}")
    cycling = cycling if cycling is not None else CyclingConfig()
    init = init if init is not None else InitConfig()
    if lr is not None:
        if cycling.strategy != "gd":
            raise InputError("lr override is only supported with strategy gd")
        if not np.isfinite(lr) or lr <= 0:
            raise InputError(f"lr must be positive, got {lr}")
    if tau is None:
        tau = 1.0
    support = task.support
    if text.dim != support.features.dim:
        raise DimensionError(
            f"text dim {text.dim} != feature dim {support.features.dim}"
        )

    start = time.perf_counter()
    t0 = time.perf_counter()
    sim = similarity(support.features, text)
    sim_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    spectrum = power_iteration_gram(
        support.features, tol=power_tol, max_iter=power_max_iter
    )
    eigen_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    gw = gamma_w(support.features, tau1=tau1, spectrum=spectrum)
    learn_alpha = alpha_mode == "learned"
    ga = gamma_alpha(support.features, text, tau2=tau2, sim=sim) if learn_alpha else None
    if cycling.strategy == "gd":
        gg = gamma_global(gw, ga if learn_alpha else gw, tau=tau)
        rate_gamma = (1.0 / lr) if lr is not None else gg
    else:
        gg = None
        rate_gamma = None

    rng = np.random.default_rng(seed) if init.mode == "random" else None
    params = init_params(support, text, config=init, rng=rng, sim=sim)
    if alpha_mode == "zero":
        params.alpha[:] = 0.0
    elif alpha_mode == "one":
        params.alpha[:] = 1.0
    state = FitState(support, text, params, sim=sim)
    init_loss = state.loss

    budget = cycling.budget
    loss_trace = np.empty(budget)
    val_acc = [
        _validation_accuracy(state.params, text, task.val_features, task.val_labels)
    ]
    val_updates = [0]
    best_acc = val_acc[0]
    best_params = state.params.copy()
    best_update = 0
    init_seconds = sim_seconds + (time.perf_counter() - t0)

    t0 = time.perf_counter()
    updates = 0
    cycle_gw, cycle_ga = gw, ga
    while updates < budget:
        if adaptive and cycling.strategy != "gd":
            cycle_gw, cycle_ga = _adaptive_constants(state, tau1, tau2)
        if cycling.strategy == "gd":
            try:
                step_joint(state, rate_gamma, update_alpha=learn_alpha)
            except NumericError as err:
                raise NumericError(str(err), update_index=updates) from None
            loss_trace[updates] = state.loss
            updates += 1
        else:
            n_w = min(cycling.iter_w, budget - updates)
            for _ in range(n_w):
                try:
                    step_block_w(state, cycle_gw)
                except NumericError as err:
                    raise NumericError(str(err), update_index=updates) from None
                loss_trace[updates] = state.loss
                updates += 1
            if learn_alpha:
                n_a = min(cycling.iter_alpha, budget - updates)
                for _ in range(n_a):
                    try:
                        step_block_alpha(state, cycle_ga)
                    except NumericError as err:
                        raise NumericError(str(err), update_index=updates) from None
                    loss_trace[updates] = state.loss
                    updates += 1
        acc = _validation_accuracy(
            state.params, text, task.val_features, task.val_labels
        )
        val_acc.append(acc)
        val_updates.append(updates)
        if acc > best_acc:
            best_acc = acc
            best_params = state.params.copy()
            best_update = updates
    steps_seconds = time.perf_counter() - t0

    alpha_final = state.params.alpha
    metadata = {
        "strategy": cycling.strategy,
        "iter_w": cycling.iter_w,
        "iter_alpha": cycling.iter_alpha,
        "budget": budget,
        "tau1": tau1,
        "tau2": tau2,
        "tau": tau if cycling.strategy == "gd" else None,
        "lr": lr,
        "init_mode": init.mode,
        "seed": seed,
        "alpha_mode": alpha_mode,
        "adaptive": bool(adaptive),
        "gamma_w": gw,
        "gamma_alpha": ga,
        "gamma_global": gg,
        "lambda_max": spectrum.lambda_max,
        "power_iterations": spectrum.iterations_used,
        "power_converged": spectrum.converged,
        "init_loss": init_loss,
        "final_loss": float(loss_trace[-1]),
        "final_params": state.params.copy(),
        "alpha_negative_fraction": float(np.mean(alpha_final < 0)),
        "val_cadence": "init+per-cycle",
        "eigen_seconds": eigen_seconds,
        "init_seconds": init_seconds,
        "steps_seconds": steps_seconds,
        "n": support.n,
        "k": support.num_classes,
        "d": support.features.dim,
        "shots": support.shots,
    }
    return FitReport(
        loss_trace=loss_trace,
        val_acc_trace=np.asarray(val_acc),
        val_eval_updates=np.asarray(val_updates, dtype=np.int64),
        best_params=best_params,
        best_update_index=best_update,
        elapsed=time.perf_counter() - start,
        metadata=metadata,
    )


def convergence_rate_check(task, text, iters, tau1=2.0, tau2=2.0, tau=2.0):
    """Verify the O(1/J) envelope of single-block descent, diagnostically.

    Runs the gd strategy for ``iters`` joint updates, estimates the
    optimum by running 50x as long, and checks
    L(v_J) - L(v*) <= (gamma / 2J) ||v0 - v*||^2 at every J. Requires
    the provable constants (all taus >= 2); the approximate defaults
    carry no such guarantee, so the check refuses to run with them.
    Returns a dict with the trace, the envelope, and any violations.
    """
    if tau1 < 2 or tau2 < 2 or tau < 2:
        raise InputError(
            "convergence_rate_check requires tau1, tau2, tau >= 2; the "
            "approximate constants carry no envelope guarantee"
        )
    if iters < 1:
        raise InputError("iters must be >= 1")
    cycling = CyclingConfig(strategy="gd", budget=iters)
    short = fit(task, text, cycling=cycling, tau1=tau1, tau2=tau2, tau=tau)
    long_cfg = CyclingConfig(strategy="gd", budget=50 * iters)
    long_run = fit(task, text, cycling=long_cfg, tau1=tau1, tau2=tau2, tau=tau)

    optimum = float(np.min(long_run.loss_trace))
    v_star = long_run.metadata["final_params"]
    init0 = init_params(task.support, text)
    dist_sq = float(
        np.sum((init0.w - v_star.w) ** 2)
        + np.sum((init0.alpha - v_star.alpha) ** 2)
    )
    gamma = gamma_global(
        short.metadata["gamma_w"], short.metadata["gamma_alpha"], tau=tau
    )
    j = np.arange(1, iters + 1, dtype=np.float64)
    envelope = optimum + gamma * dist_sq / (2.0 * j)
    gaps = short.loss_trace - envelope
    violations = np.nonzero(gaps > 1e-9)[0]
    return {
        "trace": short.loss_trace,
        "envelope": envelope,
        "optimum_estimate": optimum,
        "gamma": gamma,
        "initial_distance_sq": dist_sq,
        "violations": [int(v) for v in violations],
        "satisfied": violations.size == 0,
    }
