"""Readers and writers for the command-line file formats.

* data matrix: CSV, header of feature names, last column ``label``
* vectors and prizes: one value per line, or ``name<TAB>value`` per line
* node lists: one node name per line
* structured outputs: JSON with sorted keys
"""
import csv
import json
import math

import numpy as np

from .logistic import LabeledDataset


def read_dataset_csv(path, truth=None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[-1].strip() != "label":
            raise ValueError(f"{path}: last column must be 'label'")
        names = [h.strip() for h in header[:-1]]
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            except ValueError:
                raise ValueError(f"{path}: line {lineno} is not numeric") from None
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return LabeledDataset(X, np.array(labels, dtype=np.int64), ground_truth_support=truth,
                          feature_names=names)


def write_dataset_csv(ds, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(ds.feature_names) + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_matrix_csv(path):
    """Numeric CSV with a header row; returns ``(names, matrix)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        names = [h.strip() for h in next(reader)]
        rows = [[float(v) for v in row] for row in reader if row]
    return names, np.array(rows, dtype=np.float64).reshape(len(rows), len(names))


def _value_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if line and not line.startswith("#"):
                yield lineno, line.replace(",", "\t").split()


def read_vector(path, graph):
    """Length-``d`` vector for ``graph`` from a values file.

    Lines hold either a bare value (in node order, exactly ``d`` lines) or a
    node name and a value; unnamed nodes default to 0 in the named form.
    """
    lines = list(_value_lines(path))
    d = graph.node_count
    out = np.zeros(d)
    if lines and all(len(f) == 1 for _, f in lines):
        if len(lines) != d:
            raise ValueError(f"{path}: {len(lines)} values for a graph with {d} nodes")
        for i, (lineno, (v,)) in enumerate(lines):
            out[i] = _parse_float(v, path, lineno)
        return out
    for lineno, fields in lines:
        if len(fields) != 2:
            raise ValueError(f"{path}: line {lineno} must be 'node value'")
        out[graph.index_of(fields[0])] = _parse_float(fields[1], path, lineno)
    return out


def _parse_float(text, path, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"{path}: line {lineno}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise ValueError(f"{path}: line {lineno}: non-finite value")
    return value


def read_node_list(path, graph):
    nodes = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            name = line.strip()
            if name and not name.startswith("#"):
                nodes.add(graph.index_of(name))
    return frozenset(nodes)


def write_vector(values, names, path):
    with open(path, "w", encoding="utf-8") as fh:
        for name, v in zip(names, values):
            fh.write(f"{name}\t{float(v)!r}\n")


def weights_to_json(feature_names, coef, intercept, classes=None):
    """``{feature: coefficient, ..., "intercept": b, "sparsity": nnz}``.

    Binary models give scalars; multiclass models give per-class lists.
    """
    coef = np.atleast_2d(coef)
    out = {}
    if coef.shape[0] == 1:
        for name, c in zip(feature_names, coef[0]):
            out[name] = float(c)
        out["intercept"] = float(np.ravel(intercept)[0])
    else:
        for j, name in enumerate(feature_names):
            out[name] = [float(c) for c in coef[:, j]]
        out["intercept"] = [float(b) for b in intercept]
    out["sparsity"] = int(np.count_nonzero(np.any(coef != 0, axis=0)))
    if classes is not None:
        out["classes"] = [c.item() if hasattr(c, "item") else c for c in classes]
    return out


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
