"""Graph-sparse logistic regression.

Logistic regression whose nonzero coefficients form a small connected
subgraph of a known feature graph, fitted by projected gradient descent with
a prize-collecting Steiner tree projection. Also ships an L1 baseline,
synthetic benchmark data and a cross-validation harness.
"""
__version__ = "0.1.0"

from .estimators import GraphSparseLogisticRegression, L1LogisticRegression, make_estimator
from .evaluation import (BenchmarkReport, FoldResult, cross_validate, feature_precision_recall,
                         hypergeometric_pvalue, run_benchmark)
from .graph import (FeatureGraph, GraphError, connected_components, dump_graph, grid_graph,
                    is_connected_subgraph, load_graph)
from .graph_sparse import GSLRConfig, GSLRModel, fit_gslr
from .logistic import (LabeledDataset, NonFiniteLossError, WeightVector, fit_l1_logistic,
                       logistic_gradient, logistic_loss, predict_proba, soft_threshold)
from .pcst import PCSTInstance, PCSTSolution, brute_force_pcst, evaluate_objective, solve_pcst
from .projection import ProjectionResult, SparsityTarget, exact_project_bruteforce, project
from .synthetic import (GaussianModel, PerturbationSpec, fit_gaussian_model, generate_dataset,
                        random_connected_subgraph)

__all__ = [
    "BenchmarkReport", "FeatureGraph", "FoldResult", "GSLRConfig", "GSLRModel", "GaussianModel",
    "GraphError", "GraphSparseLogisticRegression", "L1LogisticRegression", "LabeledDataset",
    "NonFiniteLossError", "PCSTInstance", "PCSTSolution", "PerturbationSpec", "ProjectionResult",
    "SparsityTarget", "WeightVector", "brute_force_pcst", "connected_components",
    "cross_validate", "dump_graph", "evaluate_objective", "exact_project_bruteforce",
    "feature_precision_recall", "fit_gaussian_model", "fit_gslr", "fit_l1_logistic",
    "generate_dataset", "grid_graph", "hypergeometric_pvalue", "is_connected_subgraph",
    "load_graph", "logistic_gradient", "logistic_loss", "make_estimator", "predict_proba",
    "project", "random_connected_subgraph", "run_benchmark", "soft_threshold", "solve_pcst",
]
