"""Synthetic two-class data: gaussian negatives, positives shifted along a pathway.

A gaussian is fitted to a source sample matrix and kept as the low-rank
factor ``A`` with ``A A^T`` equal to the empirical covariance, so sampling
``mu + A z`` never forms the ``d x d`` covariance.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .logistic import LabeledDataset
from .utils import derive_rng

SCHEMES = ("scheme1", "scheme2")
SIGN_RULES = ("random", "positive")


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    centered_factor: np.ndarray
    per_feature_std: np.ndarray

    @property
    def n_features(self):
        return self.mean.shape[0]

    @property
    def source_sample_count(self):
        return self.centered_factor.shape[1]

    @property
    def constant_features(self):
        return np.flatnonzero(self.per_feature_std == 0.0)


@dataclass(frozen=True)
class PerturbationSpec:
    pathway: frozenset
    scheme: str = "scheme2"
    sign_rule: str = "random"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pathway", frozenset(int(i) for i in self.pathway))
        scheme = {"1": "scheme1", "2": "scheme2", 1: "scheme1", 2: "scheme2"}.get(self.scheme, self.scheme)
        object.__setattr__(self, "scheme", scheme)
        if not self.pathway:
            raise ValueError("pathway must be nonempty")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.sign_rule not in SIGN_RULES:
            raise ValueError(f"sign_rule must be one of {SIGN_RULES}")


def fit_gaussian_model(data):
    """Fit mean and low-rank covariance factor to an ``n0 x d`` sample matrix.

    Constant columns are allowed (their std is 0) and trigger a warning.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least two samples")
    if not np.all(np.isfinite(data)):
        raise ValueError("source data contains non-finite entries")
    n0 = data.shape[0]
    mean = data.mean(axis=0)
    factor = (data - mean).T / np.sqrt(n0 - 1)
    std = data.std(axis=0, ddof=1)
    model = GaussianModel(mean, factor, std)
    if model.constant_features.size:
        warnings.warn(f"{model.constant_features.size} constant feature(s) have zero variance",
                      RuntimeWarning, stacklevel=2)
    return model


def make_source_matrix(n_features, n_samples=50, rank=20, seed=0):
    """Random low-rank gaussian stand-in for a real source study."""
    rng = derive_rng(seed, "source")
    loadings = rng.standard_normal((rank, n_features)) / np.sqrt(rank)
    scores = rng.standard_normal((n_samples, rank))
    offset = rng.standard_normal(n_features)
    return scores @ loadings + offset


def sample_from_model(model, count, seed, tag="sample"):
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = derive_rng(seed, tag)
    z = rng.standard_normal((count, model.source_sample_count))
    return model.mean + z @ model.centered_factor.T


def make_perturbation(model, spec):
    """Perturbation vector, zero off the pathway.

    Scheme 1 draws ``N(0, sigma_p^2)`` per pathway feature; scheme 2 draws
    ``N(+-sigma_p, sigma_p^2)`` with a fair-coin sign (``sign_rule="random"``)
    or always ``+`` (``"positive"``).
    """
    d = model.n_features
    if max(spec.pathway) >= d:
        raise ValueError("pathway references a feature outside the model")
    rng = derive_rng(spec.seed, "perturbation", spec.scheme, spec.sign_rule)
    idx = np.array(sorted(spec.pathway))
    sigma = model.per_feature_std[idx]
    noise = rng.standard_normal(idx.size)
    if spec.scheme == "scheme1":
        offset = sigma * noise
    else:
        if spec.sign_rule == "random":
            sign = np.where(rng.random(idx.size) < 0.5, -1.0, 1.0)
        else:
            sign = np.ones(idx.size)
        offset = sign * sigma + sigma * noise
    x = np.zeros(d)
    x[idx] = offset
    return x


def generate_dataset(model, spec, n_pos=100, n_neg=100, seed=0, feature_names=None):
    """Negatives from the model; positives from the model plus one shared perturbation.

    Rows are negatives then positives (labels 0 then 1). Returns the dataset
    and the perturbation vector.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError("class counts must be at least 1")
    x = make_perturbation(model, spec)
    neg = sample_from_model(model, n_neg, seed, "negatives")
    pos = sample_from_model(model, n_pos, seed, "positives") + x
    X = np.vstack([neg, pos])
    y = np.concatenate([np.zeros(n_neg, dtype=np.int64), np.ones(n_pos, dtype=np.int64)])
    ds = LabeledDataset(X, y, ground_truth_support=spec.pathway, feature_names=feature_names)
    return ds, x


def random_connected_subgraph(g, size, seed):
    """Grow a random connected node set of ``size`` nodes from a random start."""
    if not 1 <= size <= g.node_count:
        raise ValueError("size must be between 1 and the node count")
    rng = derive_rng(seed, "pathway")
    start = int(rng.integers(g.node_count))
    chosen = [start]
    members = {start}
    frontier = sorted({v for v, _ in g.neighbors(start)})
    while len(chosen) < size:
        if not frontier:
            raise ValueError("the start node's component is smaller than the requested size")
        v = frontier.pop(int(rng.integers(len(frontier))))
        if v in members:
            continue
        members.add(v)
        chosen.append(v)
        frontier = sorted(set(frontier) | {w for w, _ in g.neighbors(v) if w not in members})
    return frozenset(chosen)


def default_pathway_size(n_features, full_size=80, full_features=16349):
    """Pathway size scaled from 80 of 16,349 features, at least 1."""
    return max(1, int(round(full_size * n_features / full_features)))
