"""Softmax logistic loss, gradients, and an L1-regularized proximal-gradient baseline.

Binary problems use the two-class softmax, so coefficients are always a
``(K, d)`` matrix with a length-``K`` intercept.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, softmax


class NonFiniteLossError(FloatingPointError):
    """The objective became non-finite, usually because the step size is too large."""


@dataclass(frozen=True)
class WeightVector:
    coefficients: np.ndarray
    intercept: np.ndarray

    def __post_init__(self):
        coef = np.atleast_2d(np.asarray(self.coefficients, dtype=np.float64))
        intercept = np.asarray(self.intercept, dtype=np.float64).reshape(-1)
        if intercept.shape != (coef.shape[0],):
            raise ValueError(f"intercept has shape {intercept.shape}, expected ({coef.shape[0]},)")
        if not (np.all(np.isfinite(coef)) and np.all(np.isfinite(intercept))):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "intercept", intercept)

    @classmethod
    def zeros(cls, n_classes, n_features):
        return cls(np.zeros((n_classes, n_features)), np.zeros(n_classes))

    @property
    def class_count(self):
        return self.coefficients.shape[0]

    @property
    def n_features(self):
        return self.coefficients.shape[1]

    def support(self, threshold=0.0):
        """Features whose coefficient exceeds ``threshold`` in any class."""
        return frozenset(np.flatnonzero(np.any(np.abs(self.coefficients) > threshold, axis=0)).tolist())


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    ground_truth_support: frozenset = None
    feature_names: list = field(default=None)
    n_classes: int = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} samples but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite entries")
        if y.size and not np.all(y == np.round(y)):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
        k = int(y.max()) + 1 if self.n_classes is None else int(self.n_classes)
        if k < 2:
            raise ValueError("need at least two classes")
        if np.any(y < 0) or np.any(y >= k):
            raise ValueError(f"labels must lie in 0..{k - 1}")
        missing = sorted(set(range(k)) - set(np.unique(y).tolist()))
        if missing:
            raise ValueError(f"classes {missing} have no samples")
        if self.feature_names is None:
            self.feature_names = [f"f{i}" for i in range(X.shape[1])]
        elif len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names length does not match the feature count")
        if self.ground_truth_support is not None:
            self.ground_truth_support = frozenset(int(i) for i in self.ground_truth_support)
        self.features, self.labels, self.n_classes = X, y, k

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, index):
        return LabeledDataset(self.features[index], self.labels[index],
                              self.ground_truth_support, list(self.feature_names), self.n_classes)


def _check(X, w):
    if X.shape[1] != w.n_features:
        raise ValueError(f"data has {X.shape[1]} features but weights have {w.n_features}")


def _logits(X, coef, intercept):
    return X @ coef.T + intercept


def _loss(X, y, coef, intercept):
    z = _logits(X, coef, intercept)
    return float(np.mean(logsumexp(z, axis=1) - z[np.arange(len(y)), y]))


def _gradient(X, y, coef, intercept):
    n = X.shape[0]
    resid = softmax(_logits(X, coef, intercept), axis=1)
    resid[np.arange(n), y] -= 1.0
    return resid.T @ X / n, resid.mean(axis=0)


def logistic_loss(ds, w):
    """Mean negative log-likelihood of ``ds`` under softmax weights ``w``."""
    _check(ds.features, w)
    return _loss(ds.features, ds.labels, w.coefficients, w.intercept)


def logistic_gradient(ds, w):
    """Exact gradient of :func:`logistic_loss`, shaped like ``w``."""
    _check(ds.features, w)
    g_coef, g_int = _gradient(ds.features, ds.labels, w.coefficients, w.intercept)
    return WeightVector(g_coef, g_int)


def predict_proba(X, w):
    X = np.asarray(X, dtype=np.float64)
    _check(X, w)
    return softmax(_logits(X, w.coefficients, w.intercept), axis=1)


def soft_threshold(v, t):
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lipschitz_constant(X, n_iter=20):
    """Upper-curvature estimate of the softmax loss in (coefficients, intercept).

    Power iteration for the top eigenvalue of ``[X 1]^T [X 1] / n``, halved
    because the per-sample softmax Hessian ``diag(pi) - pi pi^T`` has
    spectral norm at most 1/2.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    Xa = np.hstack([X, np.ones((n, 1))])
    v = np.ones(Xa.shape[1]) / math.sqrt(Xa.shape[1])
    top = 0.0
    for _ in range(n_iter):
        u = Xa.T @ (Xa @ v) / n
        top = float(np.linalg.norm(u))
        if top == 0.0:
            break
        v = u / top
    return max(top / 2.0, 1e-12)


def fit_l1_logistic(ds, reg_strength, step_size=None, max_iter=5000, tol=1e-8,
                    return_history=False):
    """Proximal gradient descent on ``loss + reg_strength * sum(|coefficients|)``.

    The intercept is unpenalized. Iteration stops when the composite objective
    decreases by less than ``tol`` or after ``max_iter`` steps.

    Returns the fitted :class:`WeightVector`, plus the per-iteration objective
    values when ``return_history`` is true.
    """
    if reg_strength < 0:
        raise ValueError("reg_strength must be nonnegative")
    X, y = ds.features, ds.labels
    eta = 1.0 / lipschitz_constant(X) if step_size is None else float(step_size)
    coef = np.zeros((ds.n_classes, ds.n_features))
    intercept = np.zeros(ds.n_classes)

    def objective(c, b):
        return _loss(X, y, c, b) + reg_strength * float(np.abs(c).sum())

    history = [objective(coef, intercept)]
    for _ in range(max_iter):
        g_coef, g_int = _gradient(X, y, coef, intercept)
        coef = soft_threshold(coef - eta * g_coef, eta * reg_strength)
        intercept = intercept - eta * g_int
        value = objective(coef, intercept)
        if not math.isfinite(value):
            raise NonFiniteLossError(f"objective became {value} with step size {eta:.3g}; "
                                     "reduce the step size")
        history.append(value)
        if history[-2] - value < tol:
            break
    w = WeightVector(coef, intercept)
    return (w, history) if return_history else w


def refit_on_support(ds, w, support, n_iter=200, step_size=None, class_supports=None):
    """Unregularized gradient descent on the coefficients in ``support`` and
    the intercept, starting from ``w``; all other coefficients stay zero.

    ``class_supports`` optionally restricts each class row to its own subset
    of ``support``.
    """
    idx = np.array(sorted(support), dtype=np.int64)
    coef = np.zeros_like(w.coefficients)
    if idx.size == 0:
        return WeightVector(coef, w.intercept.copy())
    X = ds.features[:, idx]
    mask = np.ones((w.class_count, idx.size))
    if class_supports is not None:
        for k, sup in enumerate(class_supports):
            mask[k] = np.isin(idx, sorted(sup))
    eta = 1.0 / lipschitz_constant(X) if step_size is None else float(step_size)
    sub = w.coefficients[:, idx] * mask
    intercept = w.intercept.copy()
    for _ in range(n_iter):
        g_coef, g_int = _gradient(X, ds.labels, sub, intercept)
        sub -= eta * g_coef * mask
        intercept -= eta * g_int
    coef[:, idx] = sub
    return WeightVector(coef, intercept)
