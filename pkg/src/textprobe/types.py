"""Core domain types shared by every module.

All numeric state is kept in double precision. Embedding rows are
required to arrive unit-norm (within 1e-3) and are renormalized
exactly once at construction; the step-size derivations rely on
unit-norm features, so off-sphere rows are rejected rather than
silently fixed.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DimensionError,
    InputError,
    NormError,
    NumericError,
)

NORM_TOLERANCE = 1e-3


def _as_float_matrix(data, name):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def _renormalize_rows(arr, name):
    norms = np.linalg.norm(arr, axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)[0]
    if bad.size:
        row = int(bad[0])
        raise NormError(
            f"{name} row {row} has norm {norms[row]:.6g}, expected 1 within "
            f"{NORM_TOLERANCE:g}",
            row=row,
        )
    return arr / norms[:, None]


class FeatureMatrix:
    """N x D matrix of unit-norm embedding rows."""

    def __init__(self, data):
        arr = _as_float_matrix(data, "FeatureMatrix")
        arr = _renormalize_rows(arr, "FeatureMatrix")
        arr.setflags(write=False)
        self.data = arr

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def __repr__(self):
        return f"FeatureMatrix(rows={self.rows}, dim={self.dim})"


class TextBank:
    """K x D matrix of unit-norm class text embeddings.

    K = 1 is permitted (the training-free predictor degenerates to a
    constant); fitting requires K >= 2 and checks it at fit time.
    """

    def __init__(self, data):
        arr = _as_float_matrix(data, "TextBank")
        arr = _renormalize_rows(arr, "TextBank")
        arr.setflags(write=False)
        self.data = arr

    @property
    def classes(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def __repr__(self):
        return f"TextBank(classes={self.classes}, dim={self.dim})"


class LabelVector:
    """N class indices in [0, num_classes)."""

    def __init__(self, labels, num_classes):
        arr = np.asarray(labels)
        if arr.ndim != 1:
            raise InputError(f"labels must be 1-d, got ndim={arr.ndim}")
        if arr.size < 1:
            raise InputError("labels must be non-empty")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.floor(arr)):
                raise InputError("labels must be integers")
        arr = arr.astype(np.int64)
        num_classes = int(num_classes)
        if num_classes < 1:
            raise InputError("num_classes must be >= 1")
        if arr.min() < 0 or arr.max() >= num_classes:
            raise InputError(
                f"labels must lie in [0, {num_classes}), got range "
                f"[{arr.min()}, {arr.max()}]"
            )
        arr.setflags(write=False)
        self.labels = arr
        self.num_classes = num_classes

    @property
    def n(self):
        return self.labels.shape[0]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)

    def __repr__(self):
        return f"LabelVector(n={self.n}, num_classes={self.num_classes})"


def one_hot(labels, num_classes):
    """0/1 indicator matrix with one 1 per row.

    Accepts a LabelVector or a plain integer sequence. Raises
    IndexError when any label falls outside [0, num_classes).
    """
    if isinstance(labels, LabelVector):
        idx = labels.labels
    else:
        idx = np.asarray(labels, dtype=np.int64)
        if idx.ndim != 1:
            raise InputError("labels must be 1-d")
    num_classes = int(num_classes)
    if idx.size and (idx.min() < 0 or idx.max() >= num_classes):
        raise IndexError(
            f"label out of range for {num_classes} classes: "
            f"[{idx.min()}, {idx.max()}]"
        )
    out = np.zeros((idx.shape[0], num_classes), dtype=np.float64)
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out


class SupportSet:
    """Labeled few-shot support split; S is the per-class shot count.

    Balanced sets have exactly S = N/K samples per class; unbalanced
    sets are accepted with S defined as ceil(N/K).
    """

    def __init__(self, features, labels):
        if not isinstance(features, FeatureMatrix):
            features = FeatureMatrix(features)
        if not isinstance(labels, LabelVector):
            raise InputError("labels must be a LabelVector")
        if features.rows != labels.n:
            raise DimensionError(
                f"features has {features.rows} rows but labels has {labels.n}"
            )
        self.features = features
        self.labels = labels

    @property
    def n(self):
        return self.features.rows

    @property
    def num_classes(self):
        return self.labels.num_classes

    @property
    def shots(self):
        n, k = self.n, self.num_classes
        return -(-n // k)  # ceil(N/K); == N/K when balanced

    def is_balanced(self):
        counts = self.labels.class_counts()
        return bool(np.all(counts == counts[0]))

    def __repr__(self):
        return (
            f"SupportSet(n={self.n}, num_classes={self.num_classes}, "
            f"shots={self.shots})"
        )


class ProbeParams:
    """Optimization variables: prototypes w (K x D) and blenders alpha (K).

    alpha is unconstrained in sign. The only mutable type in the
    package; the optimizer owns mutation and re-checks finiteness
    after every step.
    """

    def __init__(self, w, alpha):
        w = np.array(w, dtype=np.float64)
        alpha = np.array(alpha, dtype=np.float64)
        if w.ndim != 2:
            raise InputError("w must be 2-d")
        if alpha.ndim != 1:
            raise InputError("alpha must be 1-d")
        if w.shape[0] != alpha.shape[0]:
            raise DimensionError(
                f"w has {w.shape[0]} rows but alpha has {alpha.shape[0]} entries"
            )
        self.w = w
        self.alpha = alpha
        self.check_finite()

    @property
    def num_classes(self):
        return self.w.shape[0]

    @property
    def dim(self):
        return self.w.shape[1]

    def check_finite(self):
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.alpha))):
            raise NumericError("ProbeParams contains non-finite entries")

    def copy(self):
        return ProbeParams(self.w.copy(), self.alpha.copy())

    def effective_weights(self, text):
        """Combined per-class weight rows w_k + alpha_k t_k."""
        if text.classes != self.num_classes or text.dim != self.dim:
            raise DimensionError(
                f"params ({self.num_classes}, {self.dim}) do not match text "
                f"bank ({text.classes}, {text.dim})"
            )
        return self.w + self.alpha[:, None] * text.data

    def __repr__(self):
        return f"ProbeParams(num_classes={self.num_classes}, dim={self.dim})"


class SoftmaxCache:
    """Row-stochastic predictions paired with the logits they came from."""

    def __init__(self, p, logits):
        p = np.asarray(p, dtype=np.float64)
        logits = np.asarray(logits, dtype=np.float64)
        if p.shape != logits.shape:
            raise DimensionError("p and logits shapes disagree")
        row_sums = p.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise NumericError("softmax rows must sum to 1 within 1e-9")
        self.p = p
        self.logits = logits

    def __repr__(self):
        return f"SoftmaxCache(shape={self.p.shape})"


@dataclass(frozen=True)
class StepSizes:
    """Block and global curvature constants with their multipliers.

    gamma_global must equal tau * max(gamma_w, gamma_alpha). tau >= 2
    is the provable regime; tau = 1 is accepted for the approximate
    single-block mode used in the ablations.
    """

    gamma_w: float
    gamma_alpha: float
    gamma_global: float
    tau1: float
    tau2: float
    tau: float

    def __post_init__(self):
        for name in ("gamma_w", "gamma_alpha", "gamma_global"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InputError(f"{name} must be positive and finite, got {value}")
        if self.tau1 < 1 or self.tau2 < 1:
            raise InputError("tau1 and tau2 must be >= 1")
        if self.tau < 1:
            raise InputError("tau must be >= 1")
        expected = self.tau * max(self.gamma_w, self.gamma_alpha)
        if abs(self.gamma_global - expected) > 1e-12 * max(1.0, expected):
            raise InputError(
                f"gamma_global {self.gamma_global} != tau * max(blocks) {expected}"
            )


INIT_MODES = ("hard-mean", "random", "zero")


@dataclass(frozen=True)
class InitConfig:
    """Initialization mode and the lambda/beta scaling pair.

    Defaults (lam=None, beta=None) resolve per task to lam = 1/N and
    beta = S/(250 N), which satisfy lam/beta = 250/S; for balanced
    sets beta equals 1/(250 K).
    """

    mode: str = "hard-mean"
    lam: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.mode not in INIT_MODES:
            raise InputError(f"mode must be one of {INIT_MODES}, got {self.mode!r}")
        for name in ("lam", "beta"):
            value = getattr(self, name)
            if value is not None and (not np.isfinite(value) or value <= 0):
                raise InputError(f"{name} must be positive, got {value}")

    def resolve(self, n, shots):
        """Concrete (lam, beta) for a support set of size n with S shots."""
        lam = self.lam if self.lam is not None else 1.0 / n
        beta = self.beta if self.beta is not None else shots / (250.0 * n)
        return lam, beta


STRATEGIES = ("bmm", "bcgd", "gd")


@dataclass(frozen=True)
class CyclingConfig:
    """Block cycling schedule and total update budget.

    bcgd is bmm constrained to iter_w == iter_alpha == 1; gd ignores
    the iter fields and takes joint steps.
    """

    iter_w: int = 10
    iter_alpha: int = 1
    budget: int = 300
    strategy: str = "bmm"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InputError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )
        if self.iter_w < 1 or self.iter_alpha < 1:
            raise InputError("iter_w and iter_alpha must be >= 1")
        if self.strategy == "bcgd" and (self.iter_w != 1 or self.iter_alpha != 1):
            raise InputError("bcgd requires iter_w == iter_alpha == 1")
        if self.strategy != "gd" and self.budget < self.iter_w + self.iter_alpha:
            raise InputError("budget must cover at least one full cycle")
        if self.budget < 1:
            raise InputError("budget must be >= 1")


@dataclass
class FitReport:
    """Everything a fit produces besides the side effect of training.

    loss_trace has one entry per executed update. val_acc_trace holds
    the validation accuracy at initialization and after every outer
    cycle; val_eval_updates gives the number of updates completed at
    each of those evaluations. best_update_index is the entry of
    val_eval_updates at the (earliest) maximum of val_acc_trace.
    """

    loss_trace: np.ndarray
    val_acc_trace: np.ndarray
    val_eval_updates: np.ndarray
    best_params: ProbeParams
    best_update_index: int
    elapsed: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.val_acc_trace) != len(self.val_eval_updates):
            raise DimensionError(
                "val_acc_trace and val_eval_updates lengths disagree"
            )
        best_eval = int(np.argmax(self.val_acc_trace))
        if int(self.val_eval_updates[best_eval]) != int(self.best_update_index):
            raise InputError(
                "best_update_index does not point at the earliest maximum of "
                "val_acc_trace"
            )

    @property
    def best_val_acc(self):
        return float(np.max(self.val_acc_trace))
