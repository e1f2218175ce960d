"""Classical dense tree matrices derived from the structure matrix.

All four conversions are expressions in ``G_T``; ``(G_T^T G_T)^{-1}`` is
obtained through the exact triangular solves in :mod:`genmat.propagate`, so
integer-valued results stay integral.
"""

from __future__ import annotations

import numpy as np

from genmat.matrix import structure_matrix
from genmat.propagate import DEFAULT_RELATION_CAP, _check_cap, common_ancestor_counts, depths
from genmat.tree import HierarchicalTree

DEFAULT_DENSE_CAP = DEFAULT_RELATION_CAP


def to_adjacency(tree: HierarchicalTree, cap: int | None = DEFAULT_DENSE_CAP):
    """``A_T = I - G_T``: entry (i, f_i) is 1."""
    _check_cap(tree, cap)
    return np.rint(np.eye(tree.n) - structure_matrix(tree).to_dense()).astype(np.int64)


def to_laplacian(tree: HierarchicalTree, cap: int | None = DEFAULT_DENSE_CAP):
    """``L_T = G_T^T G_T - e_1 e_1^T``."""
    _check_cap(tree, cap)
    g = structure_matrix(tree).to_sparse()
    out = (g.T @ g).toarray()
    out[0, 0] -= 1.0
    return np.rint(out).astype(np.int64)


def to_distance(tree: HierarchicalTree, cap: int | None = DEFAULT_DENSE_CAP):
    """``D_T = G_T^{-1} 1 1^T + 1 1^T G_T^{-T} - 2 (G_T^T G_T)^{-1}``."""
    _check_cap(tree, cap)
    d = depths(tree)
    return d[:, None] + d[None, :] - 2 * common_ancestor_counts(tree, cap=None)


def to_ancestral(tree: HierarchicalTree, cap: int | None = DEFAULT_DENSE_CAP):
    """``C_T = H (G_T^T G_T)^{-1} H^T - 1`` over the leaves in leaf order."""
    _check_cap(tree, cap)
    leaves = tree.leaves
    return common_ancestor_counts(tree, cap=None)[np.ix_(leaves, leaves)] - 1


CONVERSIONS = {
    "adjacency": to_adjacency,
    "laplacian": to_laplacian,
    "distance": to_distance,
    "ancestral": to_ancestral,
}
