"""Command-line front end.

Every subcommand writes its outputs plus ``manifest.json`` into the
``--out`` directory. ``gslr rerun MANIFEST --out DIR`` replays a run from
its manifest after checking that the input files are unchanged.

Exit status: 0 success, 1 user error, 2 internal failure.
"""
import argparse
import json
import os
import sys
import time
import traceback
import warnings

import numpy as np

from . import __version__
from .estimators import make_estimator
from .evaluation import (DEFAULT_GSLR_GRID, DEFAULT_L1_GRID, BenchmarkReport, cross_validate,
                         run_benchmark)
from .graph import load_graph
from .graph_sparse import GSLRConfig, fit_gslr
from .io import (read_dataset_csv, read_json, read_matrix_csv, read_node_list, read_vector,
                 weights_to_json, write_dataset_csv, write_json)
from .logistic import LabeledDataset, NonFiniteLossError, fit_l1_logistic
from .pcst import PCSTInstance, solve_pcst
from .projection import SparsityTarget, project
from .synthetic import (PerturbationSpec, default_pathway_size, fit_gaussian_model,
                        generate_dataset, make_source_matrix, random_connected_subgraph)
from .utils import file_digest, rng_description

MANIFEST = "manifest.json"


class UserError(Exception):
    """Bad input or arguments; reported without a traceback, exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UserError(f"{self.prog}: {message}")


# --- helpers ---------------------------------------------------------------

def _load_graph(path):
    return load_graph(path)


def _load_data(path, graph=None, truth_names=None):
    """Read a data CSV, reordering columns to the graph's node order."""
    ds = read_dataset_csv(path)
    if graph is None:
        return _with_truth(ds, ds.feature_names, truth_names)
    if ds.n_features != graph.node_count:
        raise UserError(f"data {path} has {ds.n_features} features but graph has "
                        f"{graph.node_count} nodes")
    names = list(ds.feature_names)
    if names != list(graph.node_names):
        unknown = sorted(set(names) - set(graph.node_names))
        if unknown:
            raise UserError(f"data {path} has columns not in the graph, e.g. {unknown[0]!r}")
        order = [names.index(n) for n in graph.node_names]
        ds = LabeledDataset(ds.features[:, order], ds.labels,
                            feature_names=list(graph.node_names))
    return _with_truth(ds, graph.node_names, truth_names)


def _with_truth(ds, names, truth_names):
    if truth_names is None:
        return ds
    index = {n: i for i, n in enumerate(names)}
    missing = [n for n in truth_names if n not in index]
    if missing:
        raise UserError(f"truth pathway node {missing[0]!r} is not a feature")
    return LabeledDataset(ds.features, ds.labels,
                          ground_truth_support=frozenset(index[n] for n in truth_names),
                          feature_names=list(ds.feature_names))


def _truth_names(path):
    if path is None:
        return None
    truth = read_json(path)
    if "pathway" not in truth:
        raise UserError(f"{path}: missing 'pathway'")
    return list(truth["pathway"])


def _names(graph, nodes):
    return [graph.node_names[i] for i in sorted(nodes)]


def _emit(args, obj):
    if not args.quiet:
        print(json.dumps(obj, indent=2, sort_keys=True))


# --- subcommands -------------------------------------------------------------

def cmd_generate(args, out):
    graph = _load_graph(args.graph)
    d = graph.node_count
    if args.source:
        names, matrix = read_matrix_csv(args.source)
        if sorted(names) != sorted(graph.node_names):
            raise UserError(f"source {args.source} columns do not match the graph's nodes")
        matrix = matrix[:, [names.index(n) for n in graph.node_names]]
        source = {"file": os.path.basename(args.source)}
    else:
        matrix = make_source_matrix(d, args.source_samples, args.source_rank, seed=args.seed)
        source = {"synthetic": True, "samples": args.source_samples, "rank": args.source_rank}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if args.quiet else "default")
        model = fit_gaussian_model(matrix)
    if args.pathway:
        pathway = read_node_list(args.pathway, graph)
        if not pathway:
            raise UserError(f"pathway file {args.pathway} names no nodes")
    else:
        size = args.pathway_size or default_pathway_size(d)
        pathway = random_connected_subgraph(graph, size, seed=args.seed)
    spec = PerturbationSpec(pathway, args.scheme, args.sign_rule, seed=args.seed)
    ds, x = generate_dataset(model, spec, args.n_pos, args.n_neg, seed=args.seed,
                             feature_names=list(graph.node_names))
    write_dataset_csv(ds, os.path.join(out, "data.csv"))
    write_json({
        "pathway": _names(graph, pathway),
        "perturbation": {graph.node_names[i]: float(x[i]) for i in sorted(pathway)},
        "scheme": spec.scheme, "sign_rule": spec.sign_rule, "seed": args.seed,
        "n_pos": args.n_pos, "n_neg": args.n_neg, "source": source,
        "constant_features": _names(graph, model.constant_features),
        "rng": rng_description(),
    }, os.path.join(out, "truth.json"))
    return ["data.csv", "truth.json"]


def cmd_project(args, out):
    graph = _load_graph(args.graph)
    p = read_vector(args.vector, graph)
    res = project(graph, p, SparsityTarget(args.sparsity, args.slack),
                  max_bisection_steps=args.max_bisection_steps,
                  use_graph_costs=not args.unit_costs)
    obj = {
        "support": _names(graph, res.support),
        "support_size": len(res.support),
        "projected": {n: float(v) for n, v in zip(graph.node_names, res.projected)},
        "lambda_used": res.lambda_used,
        "solver_calls": res.solver_calls,
        "sparsity": args.sparsity,
    }
    write_json(obj, os.path.join(out, "projection.json"))
    _emit(args, {k: obj[k] for k in ("support", "support_size", "lambda_used")})
    return ["projection.json"]


def cmd_solve_pcst(args, out):
    graph = _load_graph(args.graph)
    prizes = read_vector(args.prizes, graph)
    if np.any(prizes < 0):
        raise UserError("prizes must be nonnegative")
    inst = PCSTInstance(graph, prizes, prize_scale=args.beta, component_penalty=args.omega,
                        target_components=args.components)
    sol = solve_pcst(inst)
    obj = {
        "nodes": _names(graph, sol.nodes),
        "edges": [[graph.node_names[graph.edge_u[e]], graph.node_names[graph.edge_v[e]],
                   float(graph.edge_costs[e])] for e in sol.edges],
        "objective": sol.objective_value,
    }
    write_json(obj, os.path.join(out, "solution.json"))
    _emit(args, obj)
    return ["solution.json"]


def cmd_train_gslr(args, out):
    graph = _load_graph(args.graph)
    ds = _load_data(args.data, graph)
    cfg = GSLRConfig(sparsity=args.sparsity, step_size=args.eta, iterations=args.iters,
                     multiclass_support_rule=args.support_rule, slack_fraction=args.slack,
                     use_graph_costs=not args.unit_costs, refit=args.refit,
                     seed=args.seed)
    model = fit_gslr(ds, graph, cfg)
    classes = sorted(int(c) for c in np.unique(ds.labels))
    coef = model.weights.coefficients
    intercept = model.weights.intercept
    if coef.shape[0] == 2:
        coef, intercept = coef[1:] - coef[:1], intercept[1:] - intercept[:1]
    obj = {
        "weights": weights_to_json(graph.node_names, coef, intercept, classes),
        "support": _names(graph, model.support),
        "trace": model.trace,
        "config": cfg.to_dict(),
        "step_size": model.step_size,
    }
    if model.class_supports is not None:
        obj["class_supports"] = [_names(graph, s) for s in model.class_supports]
    write_json(obj, os.path.join(out, "model.json"))
    _emit(args, {"support_size": len(model.support),
                 "final_loss": model.trace[-1]["loss_after_projection"]})
    return ["model.json"]


def cmd_train_l1(args, out):
    ds = _load_data(args.data)
    weights, history = fit_l1_logistic(ds, args.reg, step_size=args.eta, max_iter=args.max_iter,
                                       tol=args.tol, return_history=True)
    classes = sorted(int(c) for c in np.unique(ds.labels))
    coef, intercept = weights.coefficients, weights.intercept
    if coef.shape[0] == 2:
        coef, intercept = coef[1:] - coef[:1], intercept[1:] - intercept[:1]
    support = weights.support(1e-8)
    obj = {
        "weights": weights_to_json(ds.feature_names, coef, intercept, classes),
        "support": [ds.feature_names[i] for i in sorted(support)],
        "iterations": len(history) - 1,
        "objective": history[-1],
        "config": {"reg": args.reg, "step_size": args.eta, "max_iter": args.max_iter,
                   "tol": args.tol, "seed": args.seed},
    }
    write_json(obj, os.path.join(out, "weights.json"))
    _emit(args, {"support_size": len(support), "objective": history[-1]})
    return ["weights.json"]


def cmd_evaluate(args, out):
    graph = _load_graph(args.graph) if args.graph else None
    if args.method == "gslr" and graph is None:
        raise UserError("--method gslr needs --graph")
    ds = _load_data(args.data, graph, _truth_names(args.truth))
    value = args.param
    if value is None:
        value = 10 if args.method == "gslr" else 0.1
    if args.method == "gslr":
        if value != int(value) or value < 1:
            raise UserError("--param for gslr is a positive integer sparsity")
        value = int(value)
    est = make_estimator(args.method, value, graph=graph)
    results = cross_validate(ds, est, folds=args.folds, seed=args.seed,
                             standardize=not args.no_standardize,
                             dataset_name=os.path.basename(os.path.dirname(
                                 os.path.abspath(args.data))), record_errors=True)
    report = BenchmarkReport(results, {"method": args.method, "grid_value": value,
                                       "folds": args.folds, "seed": args.seed,
                                       "standardize": not args.no_standardize})
    _write_report(report, out, "evaluation")
    _emit(args, report.summary())
    return ["evaluation.json", "evaluation.csv"]


def _write_report(report, out, stem):
    write_json(report.to_dict(), os.path.join(out, f"{stem}.json"))
    with open(os.path.join(out, f"{stem}.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())


def _dataset_dirs(root):
    if not os.path.isdir(root):
        raise UserError(f"datasets directory {root} does not exist")
    dirs = sorted(e for e in os.listdir(root)
                  if os.path.isfile(os.path.join(root, e, "data.csv")))
    if not dirs:
        raise UserError(f"{root} has no subdirectories containing data.csv")
    return dirs


def _benchmark_inputs(args):
    return [os.path.join(args.datasets_dir, name, f)
            for name in _dataset_dirs(args.datasets_dir) for f in ("data.csv", "truth.json")
            if os.path.exists(os.path.join(args.datasets_dir, name, f))]


def cmd_benchmark(args, out):
    graph = _load_graph(args.graph)
    datasets = {}
    for name in _dataset_dirs(args.datasets_dir):
        base = os.path.join(args.datasets_dir, name)
        truth = os.path.join(base, "truth.json")
        datasets[name] = _load_data(os.path.join(base, "data.csv"), graph,
                                    _truth_names(truth if os.path.exists(truth) else None))
    gslr_grid = args.gslr_grid or default_gslr_grid(graph.node_count)
    l1_grid = args.l1_grid or list(DEFAULT_L1_GRID)
    report = run_benchmark(graph, datasets, gslr_grid, l1_grid, folds=args.folds,
                           seed=args.seed, standardize=not args.no_standardize,
                           gslr_params={"max_iter": args.iters}, jobs=args.jobs)
    _write_report(report, out, "report")
    if not args.quiet:
        for pair in report.matched_comparison():
            g, l1 = pair["gslr"], pair["l1"]
            print(f"gslr s={g['grid_value']}: precision {_fmt(g['mean_precision'])} recall "
                  f"{_fmt(g['mean_recall'])} | l1 reg={l1['grid_value']:.4g}: precision "
                  f"{_fmt(l1['mean_precision'])} recall {_fmt(l1['mean_recall'])}")
    return ["report.json", "report.csv"]


def _fmt(v):
    return "n/a" if v is None else f"{v:.3f}"


def default_gslr_grid(node_count):
    """Default sparsity grid, keeping values up to a quarter of the graph."""
    grid = [s for s in DEFAULT_GSLR_GRID if s <= node_count // 4]
    return grid or [max(1, node_count // 4)]


# --- parser ------------------------------------------------------------------

def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be at least 1")
    return value


def _nonneg_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not (value >= 0 and np.isfinite(value)):
        raise argparse.ArgumentTypeError(f"{text!r} must be a finite nonnegative number")
    return value


def _float_list(text):
    return [_nonneg_float(t) for t in text.split(",") if t]


def _int_list(text):
    return [_positive_int(t) for t in text.split(",") if t]


COMMANDS = {
    "generate": (cmd_generate, lambda a: [a.graph, a.pathway, a.source]),
    "project": (cmd_project, lambda a: [a.graph, a.vector]),
    "solve-pcst": (cmd_solve_pcst, lambda a: [a.graph, a.prizes]),
    "train-gslr": (cmd_train_gslr, lambda a: [a.graph, a.data]),
    "train-l1": (cmd_train_l1, lambda a: [a.data]),
    "evaluate": (cmd_evaluate, lambda a: [a.graph, a.data, a.truth]),
    "benchmark": (cmd_benchmark, lambda a: [a.graph] + _benchmark_inputs(a)),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    common.add_argument("--jobs", type=_positive_int, default=1,
                        help="worker processes (benchmark only)")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress stdout")

    parser = _Parser(prog="gslr", description="Graph-sparse logistic regression toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("generate", parents=[common], help="synthetic two-class dataset")
    p.add_argument("--graph", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pathway", help="file with one node name per line")
    group.add_argument("--pathway-size", type=_positive_int,
                       help="random connected pathway of this many nodes")
    p.add_argument("--scheme", choices=["1", "2"], default="2")
    p.add_argument("--sign-rule", choices=["random", "positive"], default="random")
    p.add_argument("--n-pos", type=_positive_int, default=100)
    p.add_argument("--n-neg", type=_positive_int, default=100)
    p.add_argument("--source", help="source sample CSV (header = node names)")
    p.add_argument("--source-samples", type=_positive_int, default=50)
    p.add_argument("--source-rank", type=_positive_int, default=20)

    p = sub.add_parser("project", parents=[common], help="graph-sparse projection of a vector")
    p.add_argument("--graph", required=True)
    p.add_argument("--vector", required=True)
    p.add_argument("--sparsity", type=_positive_int, required=True)
    p.add_argument("--slack", type=_nonneg_float, default=0.1)
    p.add_argument("--max-bisection-steps", type=_positive_int, default=30)
    p.add_argument("--unit-costs", action="store_true", help="ignore edge costs")

    p = sub.add_parser("solve-pcst", parents=[common], help="prize-collecting Steiner tree")
    p.add_argument("--graph", required=True)
    p.add_argument("--prizes", required=True)
    p.add_argument("--beta", type=_nonneg_float, default=1.0, help="prize scale")
    p.add_argument("--omega", type=_nonneg_float, default=0.0, help="per-component penalty")
    p.add_argument("--components", type=_positive_int, default=1)

    p = sub.add_parser("train-gslr", parents=[common], help="fit graph-sparse logistic regression")
    p.add_argument("--graph", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--sparsity", type=_positive_int, required=True)
    p.add_argument("--eta", type=_nonneg_float, default=None, help="step size")
    p.add_argument("--iters", type=_positive_int, default=100)
    p.add_argument("--support-rule", choices=["shared", "per-class"], default="shared")
    p.add_argument("--slack", type=_nonneg_float, default=0.1)
    p.add_argument("--unit-costs", action="store_true")
    p.add_argument("--refit", action="store_true",
                   help="refit the selected coefficients after the last projection")

    p = sub.add_parser("train-l1", parents=[common], help="fit L1-regularized logistic regression")
    p.add_argument("--data", required=True)
    p.add_argument("--reg", type=_nonneg_float, required=True)
    p.add_argument("--eta", type=_nonneg_float, default=None)
    p.add_argument("--max-iter", type=_positive_int, default=5000)
    p.add_argument("--tol", type=_nonneg_float, default=1e-8)

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate one configuration")
    p.add_argument("--graph")
    p.add_argument("--data", required=True)
    p.add_argument("--truth", help="truth.json with the true pathway")
    p.add_argument("--method", choices=["gslr", "l1"], required=True)
    p.add_argument("--param", type=_nonneg_float, help="sparsity (gslr) or reg strength (l1)")
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--no-standardize", action="store_true")

    p = sub.add_parser("benchmark", parents=[common], help="GSLR vs L1 over datasets")
    p.add_argument("--graph", required=True)
    p.add_argument("--datasets-dir", required=True,
                   help="directory of subdirectories with data.csv and truth.json")
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--gslr-grid", type=_int_list, help="comma-separated sparsities")
    p.add_argument("--l1-grid", type=_float_list, help="comma-separated reg strengths")
    p.add_argument("--iters", type=_positive_int, default=100)
    p.add_argument("--no-standardize", action="store_true")

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    return parser


# --- dispatch ----------------------------------------------------------------

def _config(args):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "command")}
    for flag in PATH_FLAGS:
        key = flag[2:].replace("-", "_")
        if config.get(key):
            config[key] = os.path.abspath(config[key])
    return config


def _run(argv, parser):
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise UserError("gslr: a subcommand is required")
    if args.command == "rerun":
        return _rerun(args, parser)
    func, inputs = COMMANDS[args.command]
    out = args.out
    if os.path.exists(out) and not os.path.isdir(out):
        raise UserError(f"--out {out} exists and is not a directory")
    os.makedirs(out, exist_ok=True)
    input_files = [f for f in inputs(args) if f]
    for f in input_files:
        if not os.path.isfile(f):
            raise UserError(f"input file {f} does not exist")
    start = time.perf_counter()
    outputs = func(args, out)
    write_json({
        "command": args.command,
        "argv": _replay_argv(argv),
        "config": _config(args),
        "inputs": {os.path.abspath(f): file_digest(f) for f in input_files},
        "outputs": {f: file_digest(os.path.join(out, f)) for f in outputs},
        "seed": args.seed,
        "tool_version": __version__,
        "duration_seconds": round(time.perf_counter() - start, 3),
    }, os.path.join(out, MANIFEST))
    return 0


PATH_FLAGS = ("--graph", "--data", "--truth", "--pathway", "--source", "--vector", "--prizes",
              "--datasets-dir")


def _replay_argv(argv):
    """``argv`` without ``--out`` and with input paths made absolute."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        flag, eq, value = a.partition("=")
        if flag == "--out":
            i += 1 if eq else 2
            continue
        if flag in PATH_FLAGS:
            if eq:
                a = f"{flag}={os.path.abspath(value)}"
            elif i + 1 < len(argv):
                out += [a, os.path.abspath(argv[i + 1])]
                i += 2
                continue
        out.append(a)
        i += 1
    return out


def _rerun(args, parser):
    try:
        manifest = read_json(args.manifest)
        argv = list(manifest["argv"])
        inputs = manifest["inputs"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UserError(f"cannot read manifest {args.manifest}: {exc}") from None
    for path, digest in sorted(inputs.items()):
        if not os.path.isfile(path):
            raise UserError(f"input {path} recorded in the manifest is missing")
        if file_digest(path) != digest:
            raise UserError(f"input {path} changed since the manifest was written")
    if args.quiet and "--quiet" not in argv:
        argv.append("--quiet")
    return _run(argv + ["--out", args.out], parser)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if not argv:
            parser.print_usage(sys.stderr)
            raise UserError("gslr: a subcommand is required")
        return _run(argv, parser)
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    except (UserError, ValueError, OSError, NonFiniteLossError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        print("internal error", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
