"""Dense "LO"-QR decomposition by row-selected Householder reflections.

This is the slow reference for the constraint-matrix factorisation: it
reduces ``M_T`` column by column, last column first, to a lower-triangular
block over zeros, and lets the tests watch the sparsity pattern evolve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from genmat.errors import RankDeficient, SizeCapExceeded, ZeroPivotColumn
from genmat.matrix import structure_matrix
from genmat.tree import HierarchicalTree, k_order_subtree

DEFAULT_LQR_CAP = 2_000

# relative size under which an entry counts as structurally zero
PATTERN_TOL = 1e-10


def householder_step(M, rows, j: int):
    """Reflect the rows ``rows`` of ``M`` so that column ``j`` collapses onto ``rows[0]``.

    With ``m = M[rows, j]`` the reflector ``omega = m - |m| e_1`` gives
    ``y[rows[0], j] = |m| > 0`` and zeros on the other selected rows.  All
    columns are transformed; rows outside ``rows`` are untouched.
    """
    Y = np.array(M, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.int64)
    if np.unique(rows).size != rows.size:
        raise ValueError("selected rows must be distinct")
    m = Y[rows, j]
    rho = np.linalg.norm(m)
    if rho == 0.0:
        raise ZeroPivotColumn(f"column {j} is zero on the selected rows")
    tail = m[1:] @ m[1:]
    if tail == 0.0 and m[0] > 0:
        # m is already rho * e_1: the reflector degenerates to the identity
        return Y
    omega = m.copy()
    # m_0 - rho without cancellation when m_0 > 0
    omega[0] = -tail / (m[0] + rho) if m[0] > 0 else m[0] - rho
    sub = Y[rows]
    sub -= np.outer(omega, (2.0 / (omega @ omega)) * (omega @ sub))
    sub[0, j] = rho
    sub[1:, j] = 0.0
    Y[rows] = sub
    return Y


def lo_selection(n_rows: int, n_cols: int, step: int):
    """Row set and pivot column of the ``step``-th reflection (1-based step, 0-based output).

    Step i works on column ``t = n_cols - i`` with rows ``<t, 0..t-1, n_cols..n_rows-1>``.
    """
    t = n_cols - step
    rows = np.concatenate([[t], np.arange(t), np.arange(n_cols, n_rows)]).astype(np.int64)
    return rows, t


def lo_qr(M, callback=None):
    """Reduce ``M`` (n x c, n >= c) to ``[L; O]`` with ``L`` lower triangular.

    ``callback(k, R)`` runs on the initial matrix (k = 0) and after every
    reflection k = 1..c.
    """
    R = np.array(M, dtype=np.float64)
    n_rows, n_cols = R.shape
    if n_rows < n_cols:
        raise ValueError("LO-QR needs at least as many rows as columns")
    if n_rows > DEFAULT_LQR_CAP:
        raise SizeCapExceeded(f"{n_rows} rows exceed the dense QR cap {DEFAULT_LQR_CAP}")
    scale = max(1.0, np.abs(R).max(initial=0.0))
    if callback:
        callback(0, R)
    for step in range(1, n_cols + 1):
        rows, t = lo_selection(n_rows, n_cols, step)
        if np.linalg.norm(R[rows, t]) <= PATTERN_TOL * scale:
            raise RankDeficient(f"column {t} has no remaining pivot")
        R = householder_step(R, rows, t)
        if callback:
            callback(step, R)
    return R


@dataclass
class InvariantReport:
    passed: bool
    steps_checked: int
    first_violation: str | None = None


def _nonzero(a, scale):
    return np.abs(a) > PATTERN_TOL * scale


def check_reduction_invariants(tree: HierarchicalTree) -> InvariantReport:
    """Run LO-QR on ``M_T`` and check, before every reflection but the last, that

    (a) the upper n1 x n1 block keeps the pattern of the non-leaf structure matrix,
    (b) every lower row has exactly one nonzero,
    (c) the last k columns of the lower block are zero after k reflections.
    """
    from genmat.release import ConstraintMatrix

    n1 = tree.n1
    if n1 == 0:
        return InvariantReport(True, 0)
    pattern = _nonzero(structure_matrix(k_order_subtree(tree, 1)).to_dense(), 1.0)
    M = ConstraintMatrix(tree).to_dense()
    state = {"violation": None, "checked": 0}

    def check(k, R):
        if k > n1 - 1 or state["violation"]:
            return
        scale = max(1.0, np.abs(R).max())
        upper, lower = R[:n1], R[n1:]
        state["checked"] += 1
        if not np.array_equal(_nonzero(upper, scale), pattern):
            state["violation"] = f"step {k}: upper block pattern differs from the non-leaf structure matrix"
        elif np.any(_nonzero(lower, scale).sum(axis=1) != 1):
            state["violation"] = f"step {k}: a lower row does not have exactly one nonzero"
        elif k and np.any(_nonzero(lower[:, n1 - k:], scale)):
            state["violation"] = f"step {k}: the last {k} lower columns are not zero"

    lo_qr(M, callback=check)
    return InvariantReport(state["violation"] is None, state["checked"], state["violation"])
