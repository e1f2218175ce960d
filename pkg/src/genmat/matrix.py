"""Generation Matrix: the sparse lower-triangular representation of a weighted tree.

Row ``i`` carries the node weight ``w_i`` on the diagonal and, for every
non-root node, ``-w_{i->f_i}`` in the column of its parent ``f_i``.  Nothing
else is stored, so a matrix of order n holds exactly ``2n - 1`` nonzeros.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from genmat.errors import DimensionMismatch, EigenvectorNotGuaranteed, NonPositiveWeight, ZeroWeight
from genmat.tree import HierarchicalTree, _frozen, k_order_subtree


class GenerationMatrix:
    """Weighted tree as a lower-triangular sparse matrix.

    ``node_weights`` has length n; ``edge_weights[i]`` is the weight of the
    edge from node ``i`` to its parent, with ``edge_weights[0]`` fixed to the
    root sentinel 1 (it never enters the matrix).
    """

    def __init__(self, tree: HierarchicalTree, node_weights, edge_weights):
        self.tree = tree
        self.node_weights = _frozen(np.asarray(node_weights, dtype=np.float64))
        self.edge_weights = _frozen(np.asarray(edge_weights, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.tree.n

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def diag(self):
        return self.node_weights

    @property
    def offdiag(self):
        """Stored off-diagonal values ``g[i, f_i]`` for rows 1..n-1."""
        return -self.edge_weights[1:]

    @property
    def nnz(self) -> int:
        return 2 * self.n - 1

    def triplets(self):
        """``(rows, cols, values)`` sorted by (row, col), 0-based."""
        n = self.n
        rows = np.concatenate([np.arange(1, n), np.arange(n)])
        cols = np.concatenate([self.tree.parent[1:], np.arange(n)])
        vals = np.concatenate([self.offdiag, self.node_weights])
        # parent < row, so the off-diagonal entry sorts first within its row
        key = np.lexsort((cols, rows))
        return rows[key], cols[key], vals[key]

    def to_sparse(self) -> sp.csr_array:
        r, c, v = self.triplets()
        return sp.csr_array((v, (r, c)), shape=self.shape)

    def to_dense(self):
        out = np.zeros(self.shape)
        out[np.arange(self.n), np.arange(self.n)] = self.node_weights
        out[np.arange(1, self.n), self.tree.parent[1:]] = self.offdiag
        return out

    def matvec(self, v):
        """``G v``."""
        v = np.asarray(v, dtype=np.float64)
        out = self.node_weights.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        w = self.offdiag.reshape((-1,) + (1,) * (v.ndim - 1))
        out[1:] += w * v[self.tree.parent[1:]]
        return out

    def rmatvec(self, v):
        """``G^T v``."""
        v = np.asarray(v, dtype=np.float64)
        shape = (-1,) + (1,) * (v.ndim - 1)
        out = self.node_weights.reshape(shape) * v
        np.add.at(out, self.tree.parent[1:], self.offdiag.reshape(shape) * v[1:])
        return out

    def dump(self) -> str:
        """Triplet lines ``row,col,value`` (1-based, row-sorted)."""
        r, c, v = self.triplets()
        return "".join(f"{i + 1},{j + 1},{x!r}\n" for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()))

    def __repr__(self):
        return f"GenerationMatrix(n={self.n})"


def build(tree: HierarchicalTree, w_node, w_edge) -> GenerationMatrix:
    """Generation matrix of ``tree`` from node weights (length n) and edge
    weights (length n-1, indexed by the child node 1..n-1)."""
    w_node = np.asarray(w_node, dtype=np.float64).reshape(-1)
    w_edge = np.asarray(w_edge, dtype=np.float64).reshape(-1)
    if w_node.size != tree.n:
        raise DimensionMismatch(f"need {tree.n} node weights, got {w_node.size}")
    if w_edge.size != tree.n - 1:
        raise DimensionMismatch(f"need {tree.n - 1} edge weights, got {w_edge.size}")
    if np.any(w_node == 0) or np.any(w_edge == 0):
        raise ZeroWeight("node and edge weights must be nonzero")
    return GenerationMatrix(tree, w_node, np.concatenate([[1.0], w_edge]))


def structure_matrix(tree: HierarchicalTree) -> GenerationMatrix:
    """The all-ones generation matrix ``G_T``."""
    return GenerationMatrix(tree, np.ones(tree.n), np.ones(tree.n))


def is_similar(g1: GenerationMatrix, g2: GenerationMatrix) -> bool:
    """True when both matrices have the same order and nonzero pattern."""
    return g1.n == g2.n and np.array_equal(g1.tree.parent, g2.tree.parent)


def leading_submatrix(g: GenerationMatrix, k: int) -> GenerationMatrix:
    """The n_k-order leading principal submatrix, i.e. the matrix of the k-order subtree."""
    sub = k_order_subtree(g.tree, k)
    nk = sub.n
    return GenerationMatrix(sub, g.node_weights[:nk], g.edge_weights[:nk])


def diagonal_decomposition(g: GenerationMatrix):
    """Vectors ``alpha``, ``beta`` with ``G = diag(beta) G_T diag(alpha)``.

    ``log alpha`` is the downward propagation of ``log w_node - log w_edge``
    over the structure matrix; needs strictly positive weights.
    """
    from genmat.propagate import solve_downward

    if np.any(g.node_weights <= 0) or np.any(g.edge_weights <= 0):
        raise NonPositiveWeight("diagonal decomposition works in the log domain")
    log_ratio = np.log(g.node_weights) - np.log(g.edge_weights)
    alpha = np.exp(solve_downward(structure_matrix(g.tree), log_ratio))
    beta = g.node_weights / alpha
    return alpha, beta


def eigenvalues(g: GenerationMatrix):
    return g.node_weights.copy()


def eigenvector(g: GenerationMatrix, i: int, side: str = "right"):
    """Eigenvector for eigenvalue ``w_i`` with entry ``i`` equal to 1.

    A right eigenvector is supported on the subtree of ``i`` and exists when
    no descendant shares the weight ``w_i``; a left eigenvector is supported
    on the path from ``i`` to the root and needs distinct ancestor weights.
    """
    tree = g.tree
    w = g.node_weights
    e = g.edge_weights
    lam = w[i]
    out = np.zeros(g.n)
    out[i] = 1.0
    if side == "left":
        child = i
        for j in tree.ancestors(i):
            if w[j] == lam:
                raise EigenvectorNotGuaranteed(f"ancestor {j} of {i} has the same weight {lam}")
            # other children of j are off the path and carry zeros
            out[j] = e[child] * out[child] / (w[j] - lam)
            child = j
        return out
    if side != "right":
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    parent = tree.parent
    inside = np.zeros(g.n, dtype=bool)
    inside[i] = True
    for j in range(i + 1, g.n):
        p = parent[j]
        if not inside[p]:
            continue
        inside[j] = True
        if w[j] == lam:
            raise EigenvectorNotGuaranteed(f"descendant {j} of {i} has the same weight {lam}")
        out[j] = e[j] * out[p] / (w[j] - lam)
    return out
