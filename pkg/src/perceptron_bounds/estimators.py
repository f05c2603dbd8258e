"""Scikit-learn estimator facade over the online engines.

These wrappers make the single-pass learners compose with the usual tooling
(get_params/set_params, clone, pipelines). ``fit`` performs exactly one online
pass in row order and exposes the full run trace as ``trace_`` so the bound
evaluators can certify the run afterwards.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .engine import PerceptronConfig, UpdateRule, run_primal
from .kernels import KernelSpec, run_kernel
from .stream import Stream


def _encode_labels(y):
    """Map a binary label column onto {-1, +1}, remembering the originals."""
    classes = np.unique(y)
    if classes.size > 2:
        raise ValueError(f"expected at most two classes, got {classes.size}")
    if np.all(np.isin(classes, (-1, 1))):
        return np.asarray(y, dtype=np.int64), np.array([-1, 1])
    if np.all(np.isin(classes, (0, 1))):
        return np.where(np.asarray(y) == 0, -1, 1), np.array([0, 1])
    raise ValueError(f"labels must be in {{-1,+1}} or {{0,1}}, got {classes}")


class OnlinePerceptron(BaseEstimator, ClassifierMixin):
    """Single-pass perceptron classifier with a replayable trace.

    Parameters
    ----------
    eta : float, default 1.0
        Update step size. Bound evaluators only accept traces with eta=1.
    update_rule : str, default "non_positive_score"
        "non_positive_score" updates on label*score <= 0;
        "strict_sign_mismatch" updates on a wrong predicted label.
    initial_weights : array-like or None
        Starting weights; None means zeros.

    Attributes
    ----------
    trace_ : RunTrace
        Full record of the fitting pass.
    coef_ : ndarray of shape (n_features,)
        Final weight vector.
    """

    def __init__(self, eta: float = 1.0, update_rule: str = "non_positive_score",
                 initial_weights=None):
        self.eta = eta
        self.update_rule = update_rule
        self.initial_weights = initial_weights

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        encoded, self.classes_ = _encode_labels(y)
        stream = Stream(X, encoded)
        w0 = None if self.initial_weights is None else np.asarray(self.initial_weights, dtype=float)
        config = PerceptronConfig(eta=self.eta, w0=w0, update_rule=UpdateRule(self.update_rule))
        self.trace_ = run_primal(stream, config)
        self.coef_ = self.trace_.final_weights
        self.n_features_in_ = stream.dim
        return self

    def decision_function(self, X):
        self._check_fitted()
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores >= 0, self.classes_[-1], self.classes_[0])

    def _check_fitted(self):
        if not hasattr(self, "trace_"):
            raise NotFittedError("call fit before using this estimator")


class KernelOnlinePerceptron(BaseEstimator, ClassifierMixin):
    """Single-pass kernel perceptron keeping a dual (support-point) hypothesis.

    Parameters
    ----------
    kernel : str, default "linear"
        One of "linear", "polynomial", "rbf".
    offset, degree : polynomial parameters (offset >= 0, integer degree >= 1).
    width : float
        RBF width; K(x, z) = exp(-||x-z||^2 / (2 width^2)).
    update_rule : str
        Same semantics as OnlinePerceptron.
    """

    def __init__(self, kernel: str = "linear", offset: float = 0.0, degree: int = 2,
                 width: float = 1.0, update_rule: str = "non_positive_score"):
        self.kernel = kernel
        self.offset = offset
        self.degree = degree
        self.width = width
        self.update_rule = update_rule

    def _kernel_spec(self) -> KernelSpec:
        name = str(self.kernel).lower()
        if name == "linear":
            return KernelSpec.linear()
        if name in ("polynomial", "poly"):
            return KernelSpec.polynomial(offset=self.offset, degree=self.degree)
        if name == "rbf":
            return KernelSpec.rbf(width=self.width)
        raise ValueError(f"unknown kernel {self.kernel!r}")

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        encoded, self.classes_ = _encode_labels(y)
        stream = Stream(X, encoded)
        self.trace_ = run_kernel(stream, self._kernel_spec(), UpdateRule(self.update_rule))
        self.dual_ = self.trace_.support
        self.n_features_in_ = stream.dim
        return self

    def decision_function(self, X):
        if not hasattr(self, "trace_"):
            raise NotFittedError("call fit before using this estimator")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.dual_.decision_function(X)

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores >= 0, self.classes_[-1], self.classes_[0])
