"""Triangular solves with a generation matrix and the tree statistics they yield.

``solve_upward`` solves ``G^T z = v`` (leaves to root) and ``solve_downward``
solves ``G z = v`` (root to leaves).  Both are exact substitutions in a
single pass.  Nodes of equal height never depend on each other and sit in one
contiguous block, so a pass is vectorised per height level; trees that are
deep relative to their size fall back to a plain per-node loop.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from genmat.errors import DimensionMismatch, SizeCapExceeded
from genmat.matrix import GenerationMatrix, structure_matrix
from genmat.tree import HierarchicalTree

DEFAULT_RELATION_CAP = 10_000

# average nodes per height level below which the per-node loop wins
_MIN_LEVEL_WIDTH = 32
_WINDOW_SLACK = 4


def _check(g: GenerationMatrix, v):
    v = np.array(v, dtype=np.float64)
    if v.ndim == 0 or v.shape[0] != g.n:
        raise DimensionMismatch(f"expected leading dimension {g.n}, got {v.shape[:1]}")
    return v


def _use_levels(tree: HierarchicalTree, mode: str) -> bool:
    if mode == "auto":
        return tree.n >= _MIN_LEVEL_WIDTH * tree.h
    if mode in ("levels", "scalar"):
        return mode == "levels"
    raise ValueError(f"unknown sweep mode {mode!r}")


def _bcast(w, v):
    return w.reshape((-1,) + (1,) * (v.ndim - 1))


def solve_upward(g: GenerationMatrix, v, mode: str = "auto"):
    """Solve ``G^T z = v``; ``v`` may be a vector or an (n, k) block of columns.

    ``z_i = (v_i + sum over children j of w_{j->i} z_j) / w_i``.
    """
    return _upward(g, _check(g, v), mode)


def _upward(g, acc, mode="auto"):
    """Upward solve overwriting the float64 array ``acc``."""
    tree = g.tree
    w, e, parent = g.node_weights, g.edge_weights, tree.parent
    if _use_levels(tree, mode):
        windows, offsets = tree.parent_windows
        for k in range(1, tree.h + 1):
            sl = tree.level(k)
            acc[sl] /= _bcast(w[sl], acc[sl])
            if sl.start == 0:
                continue
            flow = _bcast(e[sl], acc[sl]) * acc[sl]
            lo, hi = windows[k]
            # a dense window scatter is much cheaper than add.at, but only when
            # the window is not much wider than the level itself
            if acc.ndim == 1 and hi - lo <= _WINDOW_SLACK * (sl.stop - sl.start):
                acc[lo:hi] += np.bincount(offsets[sl], weights=flow, minlength=hi - lo)
            else:
                np.add.at(acc, parent[sl], flow)
        return acc
    if acc.ndim == 1:
        z = acc.tolist()
        wl, el, pl = w.tolist(), e.tolist(), parent.tolist()
        for i in range(tree.n - 1, 0, -1):
            zi = z[i] / wl[i]
            z[i] = zi
            z[pl[i]] += el[i] * zi
        z[0] /= wl[0]
        return np.array(z)
    for i in range(tree.n - 1, 0, -1):
        acc[i] /= w[i]
        acc[parent[i]] += e[i] * acc[i]
    acc[0] /= w[0]
    return acc


def solve_downward(g: GenerationMatrix, v, mode: str = "auto"):
    """Solve ``G z = v``; ``v`` may be a vector or an (n, k) block of columns.

    ``z_i = (v_i + w_{i->f_i} z_{f_i}) / w_i``, the root taking ``v_1 / w_1``.
    """
    return _downward(g, _check(g, v), mode)


def _downward(g, z, mode="auto"):
    """Downward solve overwriting the float64 array ``z``."""
    tree = g.tree
    w, e, parent = g.node_weights, g.edge_weights, tree.parent
    z[0] /= w[0]
    if _use_levels(tree, mode):
        for k in range(tree.h - 1, 0, -1):
            sl = tree.level(k)
            inflow = z[parent[sl]]
            inflow *= _bcast(e[sl], inflow)
            inflow += z[sl]
            inflow /= _bcast(w[sl], inflow)
            z[sl] = inflow
        return z
    if z.ndim == 1:
        zl = z.tolist()
        wl, el, pl = w.tolist(), e.tolist(), parent.tolist()
        for i in range(1, tree.n):
            zl[i] = (zl[i] + el[i] * zl[pl[i]]) / wl[i]
        return np.array(zl)
    for i in range(1, tree.n):
        z[i] = (z[i] + e[i] * z[parent[i]]) / w[i]
    return z


def child_counts(tree: HierarchicalTree):
    """``(I - G_T^T) 1``: number of children of every node."""
    ones = np.ones(tree.n)
    return np.rint(ones - structure_matrix(tree).rmatvec(ones)).astype(np.int64)


def subtree_sizes(tree: HierarchicalTree):
    """``G_T^{-T} 1``: nodes in the subtree rooted at every node."""
    return np.rint(solve_upward(structure_matrix(tree), np.ones(tree.n))).astype(np.int64)


def depths(tree: HierarchicalTree):
    """``G_T^{-1} 1``: depth of every node, the root at depth 1."""
    return np.rint(solve_downward(structure_matrix(tree), np.ones(tree.n))).astype(np.int64)


def _check_cap(tree, cap):
    if cap is not None and tree.n > cap:
        raise SizeCapExceeded(f"n={tree.n} exceeds the dense relation cap {cap}")


def _column_blocks(n, block=512):
    for start in range(0, n, block):
        stop = min(n, start + block)
        eye = np.zeros((n, stop - start))
        eye[np.arange(start, stop), np.arange(stop - start)] = 1.0
        yield start, eye


def ancestor_indicator(tree: HierarchicalTree, cap: int | None = DEFAULT_RELATION_CAP) -> sp.csr_array:
    """``G_T^{-1}`` as a sparse 0/1 matrix: entry (i, j) is 1 iff j is i or an ancestor of i."""
    _check_cap(tree, cap)
    g = structure_matrix(tree)
    rows, cols = [], []
    for start, eye in _column_blocks(tree.n):
        block = solve_downward(g, eye)
        r, c = np.nonzero(np.rint(block))
        rows.append(r)
        cols.append(c + start)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    return sp.csr_array((np.ones(r.size, dtype=np.int64), (r, c)), shape=(tree.n, tree.n))


def sibling_indicator(tree: HierarchicalTree, cap: int | None = DEFAULT_RELATION_CAP) -> sp.csr_array:
    """``G_T G_T^T``: off-diagonal +1 exactly at sibling pairs (and ``m_11 = 1``)."""
    _check_cap(tree, cap)
    g = structure_matrix(tree).to_sparse()
    out = (g @ g.T).astype(np.int64)
    out.eliminate_zeros()
    return out


def common_ancestor_counts(tree: HierarchicalTree, cap: int | None = DEFAULT_RELATION_CAP):
    """``(G_T^T G_T)^{-1}`` as a dense integer matrix.

    Entry (i, j) counts the common ancestors of i and j, each node counting
    as its own ancestor, so the diagonal holds the depths.
    """
    _check_cap(tree, cap)
    g = structure_matrix(tree)
    out = np.empty((tree.n, tree.n), dtype=np.int64)
    for start, eye in _column_blocks(tree.n):
        cols = solve_downward(g, solve_upward(g, eye))
        out[:, start:start + eye.shape[1]] = np.rint(cols)
    return out
