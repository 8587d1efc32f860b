"""scikit-learn compatible wrappers for GSLR and the L1 baseline."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .graph_sparse import GSLRConfig, fit_gslr
from .logistic import LabeledDataset, fit_l1_logistic, predict_proba


class _SoftmaxClassifier(SelectorMixin, ClassifierMixin, BaseEstimator):
    """Shared prediction code; subclasses set ``weights_`` and ``support_`` in ``fit``."""

    def _dataset(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        self._encoder = LabelEncoder().fit(y)
        self.classes_ = self._encoder.classes_
        if len(self.classes_) < 2:
            raise ValueError(f"{type(self).__name__} needs samples of at least 2 classes; "
                             f"got 1 class")
        return LabeledDataset(X, self._encoder.transform(y), n_classes=len(self.classes_))

    def _set_weights(self, weights):
        self.weights_ = weights
        coef, intercept = weights.coefficients, weights.intercept
        if len(self.classes_) == 2:
            self.coef_ = (coef[1] - coef[0])[None, :]
            self.intercept_ = np.array([intercept[1] - intercept[0]])
        else:
            self.coef_ = coef.copy()
            self.intercept_ = intercept.copy()

    def _validate_X(self, X):
        check_is_fitted(self, "weights_")
        return validate_data(self, X, dtype=np.float64, reset=False)

    def decision_function(self, X):
        X = self._validate_X(X)
        scores = X @ self.coef_.T + self.intercept_
        return scores.ravel() if scores.shape[1] == 1 else scores

    def predict_proba(self, X):
        return predict_proba(self._validate_X(X), self.weights_)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.support_] = True
        return mask


class GraphSparseLogisticRegression(_SoftmaxClassifier):
    """Logistic regression whose nonzero coefficients form a small connected
    subgraph of ``graph``.

    Parameters
    ----------
    graph : FeatureGraph
        Graph on the features; node ``i`` is column ``i`` of ``X``.
    sparsity : int, default=10
        Target support size.
    step_size : float or None, default=None
        Gradient step; ``None`` uses the inverse curvature estimate.
    max_iter : int, default=100
        Number of gradient + projection rounds.
    multiclass_support : {"shared", "per-class"}, default="shared"
    refit : bool, default=False
        Refit the selected coefficients without regularization after the
        last projection. The support does not change.
    refit_iter : int, default=200
    slack : float, default=0.1
        Accepted relative overshoot of the support size.
    max_bisection_steps : int, default=30
    use_graph_costs : bool, default=True
        Use the graph's edge costs in the projection; otherwise unit costs.
    random_state : int, default=0
        Recorded for reproducibility; fitting is deterministic.

    Attributes
    ----------
    coef_ : ndarray of shape (1, n_features) or (n_classes, n_features)
    intercept_ : ndarray
    support_ : ndarray of int
        Selected feature indices, sorted.
    trace_ : list of dict
        One record per iteration.
    step_size_ : float
    """

    method_name = "gslr"
    grid_param = "sparsity"

    def __init__(self, graph=None, sparsity=10, step_size=None, max_iter=100,
                 multiclass_support="shared", refit=False, refit_iter=200, slack=0.1,
                 max_bisection_steps=30, use_graph_costs=True, random_state=0):
        self.graph = graph
        self.sparsity = sparsity
        self.step_size = step_size
        self.max_iter = max_iter
        self.multiclass_support = multiclass_support
        self.refit = refit
        self.refit_iter = refit_iter
        self.slack = slack
        self.max_bisection_steps = max_bisection_steps
        self.use_graph_costs = use_graph_costs
        self.random_state = random_state

    def config(self):
        return GSLRConfig(sparsity=int(self.sparsity), step_size=self.step_size,
                          iterations=int(self.max_iter),
                          multiclass_support_rule=self.multiclass_support,
                          slack_fraction=self.slack, max_bisection_steps=self.max_bisection_steps,
                          use_graph_costs=self.use_graph_costs, refit=self.refit,
                          refit_iterations=self.refit_iter, seed=self.random_state)

    def fit(self, X, y):
        if self.graph is None:
            raise ValueError("GraphSparseLogisticRegression needs a feature graph")
        ds = self._dataset(X, y)
        model = fit_gslr(ds, self.graph, self.config())
        self.model_ = model
        self._set_weights(model.weights)
        self.support_ = np.array(sorted(model.support), dtype=np.int64)
        self.trace_ = model.trace
        self.step_size_ = model.step_size
        self.n_iter_ = len(model.trace)
        return self


class L1LogisticRegression(_SoftmaxClassifier):
    """L1-regularized logistic regression fitted by proximal gradient descent.

    Parameters
    ----------
    reg_strength : float, default=0.1
        Penalty on the sum of absolute coefficients (intercept unpenalized).
    step_size : float or None, default=None
    max_iter : int, default=5000
    tol : float, default=1e-8
        Stop when the objective decreases by less than this.
    threshold : float, default=1e-8
        Coefficients with larger magnitude count as selected.
    """

    method_name = "l1"
    grid_param = "reg_strength"

    def __init__(self, reg_strength=0.1, step_size=None, max_iter=5000, tol=1e-8,
                 threshold=1e-8):
        self.reg_strength = reg_strength
        self.step_size = step_size
        self.max_iter = max_iter
        self.tol = tol
        self.threshold = threshold

    def fit(self, X, y):
        ds = self._dataset(X, y)
        weights, history = fit_l1_logistic(ds, self.reg_strength, step_size=self.step_size,
                                           max_iter=self.max_iter, tol=self.tol,
                                           return_history=True)
        self._set_weights(weights)
        self.support_ = np.array(sorted(weights.support(self.threshold)), dtype=np.int64)
        self.objective_history_ = history
        self.n_iter_ = len(history) - 1
        return self


def make_estimator(method, value, graph=None, **params):
    """Estimator for ``method`` ("gslr" or "l1") with its grid parameter set to ``value``."""
    if method == "gslr":
        return GraphSparseLogisticRegression(graph=graph, sparsity=int(value), **params)
    if method == "l1":
        return L1LogisticRegression(reg_strength=float(value), **params)
    raise ValueError(f"unknown method {method!r}")

