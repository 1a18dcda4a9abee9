"""Scikit-learn style estimators wrapping the functional core.

BlendedLinearProbe fits prototypes w and per-class blenders alpha on
precomputed unit-norm embeddings; TrainingFreeProbe applies the
hard-mean initialization with zero optimization steps. Class labels
may be arbitrary values; they are mapped to text-bank rows in sorted
order (so integer labels 0..K-1 map to rows 0..K-1), and every text
row must be represented in y at fit time.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import DimensionError, InputError
from .evaluation import predict as _predict
from .initialization import init_alpha_hard, init_w_hard
from .objective import similarity
from .optimizer import TaskSplit, fit
from .types import (
    CyclingConfig,
    FeatureMatrix,
    InitConfig,
    LabelVector,
    ProbeParams,
    SupportSet,
    TextBank,
)


def _encode_labels(y, classes):
    y = np.asarray(y)
    idx = np.searchsorted(classes, y)
    idx = np.clip(idx, 0, len(classes) - 1)
    if np.any(classes[idx] != y):
        raise InputError("y contains labels outside the fitted class set")
    return idx


class BlendedLinearProbe(BaseEstimator, ClassifierMixin):
    """Few-shot linear probe blending image prototypes with text rows.

    Parameters
    ----------
    text_embeddings : array-like of shape (K, D)
        Unit-norm class text embeddings, row k belonging to the k-th
        class in sorted label order.
    strategy : {"bmm", "bcgd", "gd"}
        Block cycling strategy.
    iter_w, iter_alpha : int
        Inner-loop lengths of the two blocks per outer cycle.
    budget : int
        Total number of single-variable updates.
    tau1, tau2 : float
        Multipliers of the block curvature constants.
    init : {"hard-mean", "random", "zero"}
        Initialization mode.
    alpha_mode : {"learned", "zero", "one"}
        Learn alpha, or freeze it at 0 (plain linear probe) or 1.
    seed : int or None
        Seed for the random initialization mode.
    """

    def __init__(
        self,
        text_embeddings=None,
        strategy="bmm",
        iter_w=10,
        iter_alpha=1,
        budget=300,
        tau1=1.0,
        tau2=16.0,
        init="hard-mean",
        alpha_mode="learned",
        seed=None,
    ):
        self.text_embeddings = text_embeddings
        self.strategy = strategy
        self.iter_w = iter_w
        self.iter_alpha = iter_alpha
        self.budget = budget
        self.tau1 = tau1
        self.tau2 = tau2
        self.init = init
        self.alpha_mode = alpha_mode
        self.seed = seed

    def _text_bank(self):
        if self.text_embeddings is None:
            raise InputError("text_embeddings must be provided")
        return TextBank(self.text_embeddings)

    def fit(self, X, y, X_val=None, y_val=None):
        """Fit on support embeddings X with labels y.

        The optimizer selects its snapshot by validation accuracy; when
        no validation split is passed, the support set itself is used
        (selection then tracks training accuracy).
        """
        text = self._text_bank()
        X = np.asarray(X, dtype=np.float64)
        self.classes_ = np.unique(np.asarray(y))
        if len(self.classes_) != text.classes:
            raise InputError(
                f"y has {len(self.classes_)} distinct labels but the text "
                f"bank has {text.classes} rows"
            )
        idx = _encode_labels(y, self.classes_)
        features = FeatureMatrix(X)
        support = SupportSet(features, LabelVector(idx, text.classes))
        if X_val is None:
            val_features, val_labels = features, support.labels
        else:
            if y_val is None:
                raise InputError("X_val requires y_val")
            val_features = FeatureMatrix(np.asarray(X_val, dtype=np.float64))
            val_labels = LabelVector(
                _encode_labels(y_val, self.classes_), text.classes
            )
        task = TaskSplit(
            support=support, val_features=val_features, val_labels=val_labels
        )
        iter_w, iter_alpha = self.iter_w, self.iter_alpha
        if self.strategy == "bcgd":
            iter_w = iter_alpha = 1
        cycling = CyclingConfig(
            iter_w=iter_w,
            iter_alpha=iter_alpha,
            budget=self.budget,
            strategy=self.strategy,
        )
        report = fit(
            task,
            text,
            cycling=cycling,
            init=InitConfig(mode=self.init),
            tau1=self.tau1,
            tau2=self.tau2,
            seed=self.seed,
            alpha_mode=self.alpha_mode,
        )
        self.report_ = report
        self.w_ = report.best_params.w
        self.alpha_ = report.best_params.alpha
        self.n_features_in_ = features.dim
        return self

    def _check_fitted(self):
        if not hasattr(self, "w_"):
            raise InputError("estimator is not fitted")

    def decision_function(self, X):
        """Blended logits for each row of X."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X must have shape (n, {self.n_features_in_})"
            )
        features = FeatureMatrix(X)
        params = ProbeParams(self.w_, self.alpha_)
        text = self._text_bank()
        return features.data @ params.effective_weights(text).T

    def predict(self, X):
        """Most likely class value per row of X."""
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


class TrainingFreeProbe(BaseEstimator, ClassifierMixin):
    """Zero-step predictor from the hard-mean initialization."""

    def __init__(self, text_embeddings=None):
        self.text_embeddings = text_embeddings

    def fit(self, X, y):
        if self.text_embeddings is None:
            raise InputError("text_embeddings must be provided")
        text = TextBank(self.text_embeddings)
        X = np.asarray(X, dtype=np.float64)
        self.classes_ = np.unique(np.asarray(y))
        if len(self.classes_) != text.classes:
            raise InputError(
                f"y has {len(self.classes_)} distinct labels but the text "
                f"bank has {text.classes} rows"
            )
        idx = _encode_labels(y, self.classes_)
        features = FeatureMatrix(X)
        support = SupportSet(features, LabelVector(idx, text.classes))
        sim = similarity(features, text)
        self.w_ = init_w_hard(support)
        self.alpha_ = init_alpha_hard(support, text, sim=sim)
        self.n_features_in_ = features.dim
        return self

    def predict(self, X):
        if not hasattr(self, "w_"):
            raise InputError("estimator is not fitted")
        text = TextBank(self.text_embeddings)
        features = FeatureMatrix(np.asarray(X, dtype=np.float64))
        params = ProbeParams(self.w_, self.alpha_)
        preds = _predict(features, text, params)
        return self.classes_[preds.labels]
