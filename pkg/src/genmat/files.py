"""CSV persistence for trees, leaf counts and releases.

Tree files have the header ``id,parent,node_weight,edge_weight`` with an
empty parent on the root row; weights default to 1 and the root's edge
weight is ignored.  Count files have the header ``leaf_id,count``.  A release
is written as ``id,true,noisy,consistent`` plus a JSON sidecar of metrics.
Rows are written in tree order, so saving and loading reproduces the node
order exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from genmat.errors import GenMatError, InconsistentLeafSet, OrphanNode, ParseError
from genmat.matrix import GenerationMatrix
from genmat.tree import HierarchicalTree

TREE_HEADER = ["id", "parent", "node_weight", "edge_weight"]
COUNTS_HEADER = ["leaf_id", "count"]
RELEASE_HEADER = ["id", "true", "noisy", "consistent"]


def _fmt(x) -> str:
    return repr(float(x))


def _typed_labels(ids):
    """Integer labels when every id is a decimal integer, strings otherwise."""
    try:
        as_int = [int(s) for s in ids]
    except ValueError:
        return ids
    if all(str(i) == s for i, s in zip(as_int, ids)):
        return as_int
    return ids


def _rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if [c.strip() for c in first[:len(header)]] != header[:len(first)] or len(first) < 2:
            raise ParseError(f"expected header {','.join(header)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row] + [""] * (len(header) - len(row))


def _weight(text, lineno, name):
    if text == "":
        return 1.0
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{name} {text!r} is not a number", line=lineno) from None


def read_tree_file(path):
    """Parse a tree CSV into ``(tree, node_weights, edge_weights)`` in tree order."""
    ids, parents, wn, we = [], [], {}, {}
    for lineno, row in _rows(path, TREE_HEADER):
        nid, par = row[0], row[1]
        if not nid:
            raise ParseError("missing id", line=lineno)
        if nid in wn:
            raise ParseError(f"duplicate id {nid!r}", line=lineno)
        ids.append(nid)
        parents.append(par or None)
        wn[nid] = _weight(row[2], lineno, "node_weight")
        we[nid] = _weight(row[3], lineno, "edge_weight") if par else 1.0
    if not ids:
        raise ParseError("no nodes", line=2)
    position = {nid: i for i, nid in enumerate(ids)}
    parent = np.empty(len(ids), dtype=np.int64)
    for i, (nid, par) in enumerate(zip(ids, parents)):
        if par is None:
            parent[i] = -1
        elif par in position:
            parent[i] = position[par]
        else:
            raise OrphanNode(f"node {nid!r} has unknown parent {par!r}")
    # a file already in descending height order keeps its row order
    tree = HierarchicalTree.from_parent_array(parent, _typed_labels(ids), keep_order=True)
    source = np.argsort(tree.permutation.indices)
    node_w = np.array([wn[ids[i]] for i in source.tolist()])
    edge_w = np.array([we[ids[i]] for i in source.tolist()])
    edge_w[0] = 1.0
    return tree, node_w, edge_w


def load_tree(path) -> HierarchicalTree:
    return read_tree_file(path)[0]


def load_generation_matrix(path) -> GenerationMatrix:
    """Weighted tree file as a generation matrix (weights must be nonzero)."""
    from genmat.matrix import build

    tree, node_w, edge_w = read_tree_file(path)
    return build(tree, node_w, edge_w[1:])


def save_tree(tree, path, node_weights=None, edge_weights=None):
    """Write ``tree`` (or a GenerationMatrix, with its weights) as a tree CSV."""
    if isinstance(tree, GenerationMatrix):
        node_weights, edge_weights, tree = tree.node_weights, tree.edge_weights, tree.tree
    n = tree.n
    node_weights = np.ones(n) if node_weights is None else np.asarray(node_weights, dtype=np.float64)
    edge_weights = np.ones(n) if edge_weights is None else np.asarray(edge_weights, dtype=np.float64)
    if edge_weights.size == n - 1:
        edge_weights = np.concatenate([[1.0], edge_weights])
    labels = tree.labels.tolist()
    parent = tree.parent.tolist()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TREE_HEADER)
        for i in range(n):
            p = parent[i]
            w.writerow([labels[i], "" if p < 0 else labels[p], _fmt(node_weights[i]),
                        "" if p < 0 else _fmt(edge_weights[i])])


def load_counts(path, tree: HierarchicalTree):
    """Leaf counts as a vector in leaf order; every leaf must appear exactly once."""
    lookup = {str(lab): i for i, lab in enumerate(tree.labels.tolist())}
    x = np.full(tree.m, np.nan)
    for lineno, row in _rows(path, COUNTS_HEADER):
        lid, raw = row[0], row[1]
        if lid not in lookup:
            raise InconsistentLeafSet(f"line {lineno}: {lid!r} is not a node of the tree")
        idx = lookup[lid]
        if idx < tree.n1:
            raise InconsistentLeafSet(f"line {lineno}: {lid!r} is not a leaf")
        try:
            value = int(raw)
        except ValueError:
            raise ParseError(f"count {raw!r} is not an integer", line=lineno) from None
        if value < 0:
            raise ParseError(f"count {value} is negative", line=lineno)
        if not np.isnan(x[idx - tree.n1]):
            raise InconsistentLeafSet(f"line {lineno}: leaf {lid!r} listed twice")
        x[idx - tree.n1] = value
    missing = np.flatnonzero(np.isnan(x))
    if missing.size:
        first = tree.labels[tree.n1 + missing[0]]
        raise InconsistentLeafSet(f"{missing.size} leaves have no count (first: {first!r})")
    return x


def save_counts(x, tree: HierarchicalTree, path):
    labels = tree.labels.tolist()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNTS_HEADER)
        for i, c in enumerate(np.asarray(x).tolist()):
            w.writerow([labels[tree.n1 + i], int(c)])


def metrics_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_release(report, path):
    """Write the release CSV and its metrics sidecar (same name, ``.json``)."""
    labels = report.labels.tolist()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RELEASE_HEADER)
        for row in zip(labels, report.v_true.tolist(), report.v_noisy.tolist(), report.v_consistent.tolist()):
            w.writerow([row[0], _fmt(row[1]), _fmt(row[2]), _fmt(row[3])])
    with open(metrics_path(path), "w") as fh:
        json.dump(report.metrics(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_release(path, tree: HierarchicalTree | None = None):
    """Read a release CSV; with ``tree`` the columns are returned in tree order.

    Returns a dict of ``labels``, ``true``, ``noisy`` and ``consistent``.
    """
    labels, cols = [], {"true": [], "noisy": [], "consistent": []}
    for lineno, row in _rows(path, RELEASE_HEADER):
        labels.append(row[0])
        for name, text in zip(("true", "noisy", "consistent"), row[1:4]):
            try:
                cols[name].append(float(text))
            except ValueError:
                raise ParseError(f"{name} value {text!r} is not a number", line=lineno) from None
    out = {k: np.array(v) for k, v in cols.items()}
    if tree is not None:
        lookup = {str(lab): i for i, lab in enumerate(tree.labels.tolist())}
        if len(labels) != tree.n or set(labels) != set(lookup):
            raise GenMatError("release rows do not match the tree's nodes")
        pos = np.array([lookup[s] for s in labels])
        for k in cols:
            arr = np.empty(tree.n)
            arr[pos] = out[k]
            out[k] = arr
        labels = tree.labels.tolist()
    out["labels"] = labels
    return out
