"""Graph-sparse logistic regression by projected gradient descent."""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .logistic import (NonFiniteLossError, WeightVector, _gradient, _loss,
                       lipschitz_constant, refit_on_support)
from .projection import LAMBDA_BOUNDS, SparsityTarget, project

SUPPORT_RULES = ("shared", "per-class")


@dataclass(frozen=True)
class GSLRConfig:
    sparsity: int
    step_size: float = None
    iterations: int = 100
    multiclass_support_rule: str = "shared"
    slack_fraction: float = 0.10
    max_bisection_steps: int = 30
    lambda_bounds: tuple = LAMBDA_BOUNDS
    use_graph_costs: bool = True
    refit: bool = False
    refit_iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if int(self.sparsity) != self.sparsity or self.sparsity < 1:
            raise ValueError("sparsity must be a positive integer")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError("iterations must be a positive integer")
        if self.step_size is not None and not (self.step_size >= 0 and math.isfinite(self.step_size)):
            raise ValueError("step_size must be a finite nonnegative number")
        if self.multiclass_support_rule not in SUPPORT_RULES:
            raise ValueError(f"multiclass_support_rule must be one of {SUPPORT_RULES}")

    def to_dict(self):
        out = asdict(self)
        out["lambda_bounds"] = list(self.lambda_bounds)
        return out


@dataclass
class GSLRModel:
    weights: WeightVector
    support: frozenset
    trace: list = field(default_factory=list)
    config: GSLRConfig = None
    step_size: float = None
    class_supports: list = None


def fit_gslr(ds, g, cfg):
    """Run ``cfg.iterations`` rounds of gradient step + graph-sparse projection.

    Starts from zero weights. The intercept takes plain gradient steps and is
    never projected. With the "shared" rule the projection prizes are the
    per-feature sums of squared coefficients over classes; with "per-class"
    each class row is projected on its own.

    Raises
    ------
    ValueError
        If the dataset's feature count differs from the graph's node count.
    NonFiniteLossError
        If the loss becomes non-finite.
    """
    if ds.n_features != g.node_count:
        raise ValueError(f"dataset has {ds.n_features} features but the graph has "
                         f"{g.node_count} nodes")
    X, y = ds.features, ds.labels
    eta = 1.0 / lipschitz_constant(X) if cfg.step_size is None else float(cfg.step_size)
    target = SparsityTarget(int(cfg.sparsity), cfg.slack_fraction)
    proj_kw = dict(max_bisection_steps=cfg.max_bisection_steps,
                   lambda_bounds=cfg.lambda_bounds, use_graph_costs=cfg.use_graph_costs)

    coef = np.zeros((ds.n_classes, ds.n_features))
    intercept = np.zeros(ds.n_classes)
    trace = []
    class_supports = None
    for i in range(cfg.iterations):
        g_coef, g_int = _gradient(X, y, coef, intercept)
        step_coef = coef - eta * g_coef
        intercept = intercept - eta * g_int
        loss_before = _loss(X, y, step_coef, intercept)
        if not math.isfinite(loss_before):
            raise NonFiniteLossError(f"loss became {loss_before} at iteration {i} with step "
                                     f"size {eta:.3g}; reduce the step size")

        coef = np.zeros_like(step_coef)
        if cfg.multiclass_support_rule == "shared" or ds.n_classes == 2:
            res = project(g, np.sqrt(np.sum(step_coef ** 2, axis=0)), target, **proj_kw)
            idx = sorted(res.support)
            coef[:, idx] = step_coef[:, idx]
            support = res.support
            lambdas = [res.lambda_used]
            calls = res.solver_calls
        else:
            class_supports = []
            lambdas, calls = [], 0
            for k in range(ds.n_classes):
                res = project(g, step_coef[k], target, **proj_kw)
                coef[k] = res.projected
                class_supports.append(res.support)
                lambdas.append(res.lambda_used)
                calls += res.solver_calls
            support = frozenset().union(*class_supports)

        trace.append({
            "iteration": i + 1,
            "loss_before_projection": loss_before,
            "loss_after_projection": _loss(X, y, coef, intercept),
            "support_size": len(support),
            "lambda_used": lambdas[0] if len(lambdas) == 1 else lambdas,
            "solver_calls": calls,
        })

    weights = WeightVector(coef, intercept)
    if cfg.refit and support:
        weights = refit_on_support(ds, weights, support, n_iter=cfg.refit_iterations,
                                   class_supports=class_supports)
    return GSLRModel(weights, support, trace, cfg, eta, class_supports)
