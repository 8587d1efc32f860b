"""Cross-validation, feature-selection metrics, enrichment p-values, benchmarks."""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from .estimators import make_estimator
from .utils import derive_rng, rng_description

DEFAULT_L1_GRID = tuple(float(v) for v in np.logspace(-3, 2, 16))
DEFAULT_GSLR_GRID = (5, 10, 20, 40, 80)
SELECTION_THRESHOLD = 1e-8

CSV_FIELDS = ("dataset", "method", "grid_value", "fold", "accuracy", "precision", "recall",
              "support_size", "error")


@dataclass
class FoldResult:
    dataset: str
    fold_index: int
    method: str
    sparsity_param: float
    holdout_accuracy: float = None
    selected: frozenset = frozenset()
    feature_precision: float = None
    feature_recall: float = None
    error: str = None

    @property
    def support_size(self):
        return len(self.selected)

    def to_row(self):
        return {
            "dataset": self.dataset, "method": self.method, "grid_value": self.sparsity_param,
            "fold": self.fold_index, "accuracy": self.holdout_accuracy,
            "precision": self.feature_precision, "recall": self.feature_recall,
            "support_size": None if self.error else self.support_size, "error": self.error,
        }


def feature_precision_recall(selected, truth):
    """Overlap of selected features with the true support.

    Returns ``(precision, recall)``; precision is ``None`` when nothing was
    selected.
    """
    truth = set(truth)
    if not truth:
        raise ValueError("the true support must be nonempty")
    selected = set(selected)
    hits = len(selected & truth)
    precision = hits / len(selected) if selected else None
    return precision, hits / len(truth)


def stratified_folds(y, folds, seed):
    """Fold index per sample: each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("need at least two folds")
    assignment = np.empty(len(y), dtype=np.int64)
    rng = derive_rng(seed, "folds")
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < 2:
            raise ValueError(f"class {cls} has {len(idx)} sample(s); every training split "
                             "needs every class")
        assignment[rng.permutation(idx)] = np.arange(len(idx)) % folds
    return assignment


def _standardize(train, test):
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std[std == 0] = 1.0
    return (train - mean) / std, (test - mean) / std


def cross_validate(ds, estimator, folds=10, seed=0, standardize=True, dataset_name="dataset",
                   record_errors=False):
    """Stratified k-fold evaluation of a fresh clone of ``estimator`` per fold.

    ``estimator`` must expose ``support_`` after fitting (both estimators in
    this package do). Precision/recall need ``ds.ground_truth_support``;
    otherwise they are left ``None``. With ``record_errors`` a failing fold
    becomes a :class:`FoldResult` carrying the error message.
    """
    assignment = stratified_folds(ds.labels, folds, seed)
    method = getattr(estimator, "method_name", type(estimator).__name__)
    grid_param = getattr(estimator, "grid_param", None)
    value = estimator.get_params().get(grid_param) if grid_param else None
    results = []
    for fold in range(folds):
        test = assignment == fold
        train = ~test
        missing = set(np.unique(ds.labels)) - set(np.unique(ds.labels[train]))
        if missing:
            raise ValueError(f"fold {fold}: classes {sorted(missing)} absent from training split")
        X_train, X_test = ds.features[train], ds.features[test]
        if standardize:
            X_train, X_test = _standardize(X_train, X_test)
        try:
            model = clone(estimator).fit(X_train, ds.labels[train])
            accuracy = float(np.mean(model.predict(X_test) == ds.labels[test]))
            selected = frozenset(int(i) for i in model.support_)
        except Exception as exc:
            if not record_errors:
                raise
            results.append(FoldResult(dataset_name, fold, method, value,
                                      error=f"{type(exc).__name__}: {exc}"))
            continue
        precision = recall = None
        if ds.ground_truth_support:
            precision, recall = feature_precision_recall(selected, ds.ground_truth_support)
        results.append(FoldResult(dataset_name, fold, method, value, accuracy, selected,
                                  precision, recall))
    return results


def _log_choose(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeometric_pvalue(population, successes, draws, overlap):
    """``P(X >= overlap)`` for ``X ~ Hypergeometric(population, successes, draws)``.

    Terms are formed from log-gamma and summed in log space.
    """
    N, K, n, k = (int(v) for v in (population, successes, draws, overlap))
    if N < 0 or not (0 <= K <= N) or not (0 <= n <= N):
        raise ValueError("need 0 <= successes, draws <= population")
    if not 0 <= k <= min(K, n):
        raise ValueError("overlap must lie in 0..min(successes, draws)")
    if k <= max(0, n + K - N):
        return 1.0
    log_total = _log_choose(N, n)
    logs = [_log_choose(K, i) + _log_choose(N - K, n - i) - log_total
            for i in range(k, min(K, n) + 1)]
    top = max(logs)
    value = math.exp(top) * math.fsum(math.exp(v - top) for v in logs)
    return min(1.0, value)


def _mean(values):
    return math.fsum(values) / len(values) if values else None


@dataclass
class BenchmarkReport:
    results: list
    config: dict = field(default_factory=dict)

    def ok_results(self):
        return [r for r in self.results if r.error is None]

    def summary(self):
        """Per (method, grid value) means over datasets and folds.

        Folds with an empty selection have no precision; they are excluded
        from the precision mean and counted in ``precision_excluded``.
        """
        cells = {}
        for r in self.results:
            cells.setdefault((r.method, r.sparsity_param), []).append(r)
        out = []
        for (method, value), rows in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            ok = [r for r in rows if r.error is None]
            precisions = [r.feature_precision for r in ok if r.feature_precision is not None]
            recalls = [r.feature_recall for r in ok if r.feature_recall is not None]
            out.append({
                "method": method, "grid_value": value, "runs": len(rows),
                "failures": len(rows) - len(ok),
                "mean_accuracy": _mean([r.holdout_accuracy for r in ok]),
                "mean_precision": _mean(precisions),
                "precision_excluded": len(ok) - len(precisions),
                "mean_recall": _mean(recalls),
                "mean_support_size": _mean([float(r.support_size) for r in ok]),
            })
        return out

    def matched_comparison(self):
        """Pair each GSLR grid value with the L1 grid value whose mean support
        size is nearest GSLR's mean realized support size."""
        summary = self.summary()
        gslr = [s for s in summary if s["method"] == "gslr" and s["mean_support_size"] is not None]
        l1 = [s for s in summary if s["method"] == "l1" and s["mean_support_size"] is not None]
        pairs = []
        for g in gslr:
            if not l1:
                break
            match = min(l1, key=lambda s: (abs(s["mean_support_size"] - g["mean_support_size"]),
                                           s["grid_value"]))
            pairs.append({"gslr": g, "l1": match})
        return pairs

    def to_dict(self):
        return {
            "config": self.config,
            "results": [dict(r.to_row(), selected=sorted(r.selected)) for r in self.results],
            "summary": self.summary(),
            "matched": self.matched_comparison(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in self.results:
            row = r.to_row()
            writer.writerow({k: "" if row[k] is None else row[k] for k in CSV_FIELDS})
        return buf.getvalue()


def _run_cell(name, ds, method, value, graph, params, folds, seed, standardize):
    est = make_estimator(method, value, graph=graph, **params)
    try:
        return cross_validate(ds, est, folds=folds, seed=seed, standardize=standardize,
                              dataset_name=name, record_errors=True)
    except ValueError as exc:
        return [FoldResult(name, f, method, value, error=f"ValueError: {exc}") for f in range(folds)]


def run_benchmark(graph, datasets, gslr_grid=DEFAULT_GSLR_GRID, l1_grid=DEFAULT_L1_GRID, folds=10,
                  seed=0, standardize=True, gslr_params=None, l1_params=None, jobs=1):
    """Cross-validate GSLR and L1 over their grids on every dataset.

    ``datasets`` maps a name to a :class:`LabeledDataset` whose features
    are the graph's nodes. Fold assignment depends on ``(seed, dataset)``
    only, so both methods see identical splits. Cells run on ``jobs``
    workers; the report lists results in (dataset, method, grid, fold) order
    regardless of scheduling.
    """
    gslr_params = dict(gslr_params or {})
    l1_params = dict(l1_params or {})
    for name, ds in datasets.items():
        if ds.n_features != graph.node_count:
            raise ValueError(f"dataset {name!r} has {ds.n_features} features but the graph has "
                             f"{graph.node_count} nodes")
    cells = []
    for name in sorted(datasets):
        fold_seed = int(derive_rng(seed, "dataset", name).integers(2 ** 31))
        for method, grid, params in (("gslr", gslr_grid, gslr_params), ("l1", l1_grid, l1_params)):
            for value in grid:
                cells.append((name, datasets[name], method, value, graph, params, folds,
                              fold_seed, standardize))
    if jobs == 1:
        out = [_run_cell(*c) for c in cells]
    else:
        out = Parallel(n_jobs=jobs)(delayed(_run_cell)(*c) for c in cells)
    results = [r for rows in out for r in rows]
    config = {
        "gslr_grid": [int(v) for v in gslr_grid], "l1_grid": [float(v) for v in l1_grid],
        "folds": folds, "seed": seed, "standardize": standardize,
        "gslr_params": gslr_params, "l1_params": l1_params,
        "datasets": sorted(datasets), "selection_threshold": SELECTION_THRESHOLD,
        "rng": rng_description(),
    }
    return BenchmarkReport(results, config)
