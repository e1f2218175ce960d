"""Differentially private release of hierarchical tree counts.

Pipeline: aggregate leaf counts up the tree, add Laplace noise of scale
``h / epsilon`` to every node, then project the noisy vector onto the
consistent subspace ``{v : M_T^T v = 0}``.  The projection

    v_bar = v_noisy - M (G^{-1} (G^{-T} (M^T v_noisy)))

uses the generation matrix ``G`` over the non-leaf subtree that satisfies
``G^T G = M^T M``; its weights come from a single O(n) sweep, so the whole
projection is linear in the tree size.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from genmat.errors import DimensionMismatch, NonPositiveEpsilon, SizeCapExceeded
from genmat.matrix import GenerationMatrix, structure_matrix
from genmat.metrics import metric_bias, metric_rmse_nq
from genmat.propagate import _downward, _upward, _use_levels, solve_upward
from genmat.tree import HierarchicalTree, k_order_subtree

DEFAULT_ORACLE_CAP = 2_000


def dense_cap() -> int:
    """Size limit for the dense oracle; ``GENMAT_DENSE_CAP`` overrides it."""
    raw = os.environ.get("GENMAT_DENSE_CAP")
    return int(raw) if raw else DEFAULT_ORACLE_CAP


class ConstraintMatrix:
    """Implicit n x n1 consistency constraint matrix ``M_T``.

    Column j (a non-leaf node) holds +1 at row j and -1 at each child of j,
    so ``M^T v`` is "node minus sum of children" and vanishes exactly on
    consistent vectors.
    """

    def __init__(self, tree: HierarchicalTree):
        self.tree = tree

    @property
    def shape(self):
        return (self.tree.n, self.tree.n1)

    def rmatvec(self, v):
        """``M^T v`` (length n1)."""
        v = np.asarray(v, dtype=np.float64)
        t = self.tree
        if v.shape[0] != t.n:
            raise DimensionMismatch(f"expected {t.n} node values, got {v.shape[0]}")
        # every parent index is below n1, so the counts have exactly n1 bins
        child_sums = np.bincount(t.parent[1:], weights=v[1:], minlength=t.n1)
        child_sums -= v[:t.n1]
        return np.negative(child_sums, out=child_sums)

    def matvec(self, y):
        """``M y`` (length n)."""
        y = np.asarray(y, dtype=np.float64)
        t = self.tree
        if y.shape[0] != t.n1:
            raise DimensionMismatch(f"expected {t.n1} constraint values, got {y.shape[0]}")
        out = np.zeros(t.n)
        out[:t.n1] = y
        out[1:] -= y[t.parent[1:]]
        return out

    def to_dense(self):
        t = self.tree
        out = np.zeros(self.shape)
        out[np.arange(t.n1), np.arange(t.n1)] = 1.0
        out[np.arange(1, t.n), t.parent[1:]] = -1.0
        return out

    def gram(self):
        """Dense ``M^T M``."""
        m = self.to_dense()
        return m.T @ m


def constraint_matrix(tree: HierarchicalTree) -> ConstraintMatrix:
    return ConstraintMatrix(tree)


def build_tree_values(x, tree: HierarchicalTree):
    """``v = G_T^{-T} H^T x``: leaves carry ``x``, internal nodes their subtree sums."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.m,):
        raise DimensionMismatch(f"expected {tree.m} leaf counts, got shape {x.shape}")
    return solve_upward(structure_matrix(tree), tree.leaf_map.transpose(x))


def inverse_build(v, tree: HierarchicalTree):
    """``x = H v``: the leaf values in leaf order."""
    return tree.leaf_map.forward(np.asarray(v, dtype=np.float64))


def laplace_scale(tree: HierarchicalTree, epsilon: float) -> float:
    if not epsilon > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    return tree.h / epsilon


def sample_laplace(scale: float, size, rng: np.random.Generator):
    """Laplace(0, scale) draws by inverting the CDF of uniforms on (0, 1)."""
    # random() is a multiple of 2**-53 in [0, 1); the half-step shift keeps 0 and 1 out
    u = rng.random(size) + 2.0 ** -54 - 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def add_laplace_noise(v, epsilon: float, tree: HierarchicalTree, seed=None):
    """``v + xi`` with i.i.d. ``xi_i ~ Lap(h / epsilon)``; the tree height is the sensitivity."""
    v = np.asarray(v, dtype=np.float64)
    b = laplace_scale(tree, epsilon)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return v + sample_laplace(b, v.shape, rng)


@dataclass(frozen=True, eq=False)
class EquivalentGM:
    """Generation matrix over the non-leaf subtree with ``G^T G = M_T^T M_T``.

    Node weights are ``sqrt(1 + theta_i)`` and edge weights their inverses.
    """

    gm: GenerationMatrix
    theta: np.ndarray

    @property
    def theta_prime(self):
        return self.theta + 1.0

    @property
    def tree(self) -> HierarchicalTree:
        return self.gm.tree

    def scaled_gm(self) -> GenerationMatrix:
        """``G^(theta', 1)``, the square-root-free form used by :func:`gmc_release_nosqrt`."""
        return GenerationMatrix(self.gm.tree, self.theta_prime, np.ones(self.gm.n))


def construct_equivalent_gm(tree: HierarchicalTree, mode: str = "auto") -> EquivalentGM:
    """Weights of the inner-product-equivalent generation matrix.

    ``theta`` starts at the child counts of the non-leaf nodes; walking from
    the last non-leaf node back to the second, each node subtracts
    ``1 / (1 + theta_i)`` from its parent.  A parent has larger height than
    its children, so processing whole height levels bottom-up is the same
    sweep.
    """
    sub = k_order_subtree(tree, 1)
    n1 = sub.n
    theta = tree.child_counts[:n1].astype(np.float64)
    parent = tree.parent
    if _use_levels(sub, mode):
        for k in range(2, tree.h):
            sl = tree.level(k)
            np.subtract.at(theta, parent[sl], 1.0 / (1.0 + theta[sl]))
    else:
        th = theta.tolist()
        pl = parent.tolist()
        for i in range(n1 - 1, 0, -1):
            th[pl[i]] -= 1.0 / (1.0 + th[i])
        theta = np.array(th)
    assert np.all(theta >= 0), "theta must stay non-negative"
    w = np.sqrt(1.0 + theta)
    edge = 1.0 / w
    edge[0] = 1.0
    return EquivalentGM(GenerationMatrix(sub, w, edge), theta)


def _project(tree, v_noisy, solve_normal):
    v = np.asarray(v_noisy, dtype=np.float64)
    if v.shape != (tree.n,):
        raise DimensionMismatch(f"expected {tree.n} node values, got shape {v.shape}")
    if tree.n1 == 0:
        return v.copy()
    y = solve_normal(ConstraintMatrix(tree).rmatvec(v))
    # v - M y in one gather: parent[0] == -1 picks y[-1] and is reset below
    out = np.take(y, tree.parent)
    out[0] = 0.0
    out += v
    out[:tree.n1] -= y
    return out


def gmc_release(tree: HierarchicalTree, v_noisy, egm: EquivalentGM | None = None):
    """Optimally consistent release: the Euclidean projection of ``v_noisy``
    onto consistent vectors, through one upward and one downward solve.

    Pass ``egm`` to reuse the equivalent matrix across releases on one tree.
    """
    if tree.n1 and egm is None:
        egm = construct_equivalent_gm(tree)

    def normal(delta):
        # delta is a fresh array owned by the projection, so solve in place
        return _downward(egm.gm, _upward(egm.gm, delta))

    return _project(tree, v_noisy, normal)


def gmc_release_nosqrt(tree: HierarchicalTree, v_noisy, egm: EquivalentGM | None = None):
    """Same projection as :func:`gmc_release` without square roots:
    ``(M^T M)^{-1} = G'^{-1} diag(theta') G'^{-T}`` with ``G' = G^(theta', 1)``."""
    if tree.n1 and egm is None:
        egm = construct_equivalent_gm(tree)

    def normal(delta):
        g = egm.scaled_gm()
        z = _upward(g, delta)
        z *= egm.theta_prime
        return _downward(g, z)

    return _project(tree, v_noisy, normal)


def dense_oracle_release(tree: HierarchicalTree, v_noisy, cap: int | None = None):
    """Reference projection ``v - M (M^T M)^{-1} M^T v`` with dense normal equations."""
    cap = dense_cap() if cap is None else cap
    if tree.n > cap:
        raise SizeCapExceeded(f"n={tree.n} exceeds the dense oracle cap {cap}")
    v = np.asarray(v_noisy, dtype=np.float64)
    if v.shape != (tree.n,):
        raise DimensionMismatch(f"expected {tree.n} node values, got shape {v.shape}")
    if tree.n1 == 0:
        return v.copy()
    m = ConstraintMatrix(tree).to_dense()
    return v - m @ np.linalg.solve(m.T @ m, m.T @ v)


def theoretical_mse(tree: HierarchicalTree, epsilon: float):
    """Expected total squared error ``(2 n h^2 / eps^2, 2 m h^2 / eps^2)``
    before and after the consistent projection."""
    if not epsilon > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    s = 2.0 * tree.h ** 2 / epsilon ** 2
    return s * tree.n, s * tree.m


RELEASE_METHODS = {
    "gmc": gmc_release,
    "nosqrt": gmc_release_nosqrt,
}


@dataclass(eq=False)
class ReleaseReport:
    epsilon: float
    sensitivity: int
    seed: int | None
    labels: np.ndarray
    v_true: np.ndarray
    v_noisy: np.ndarray
    v_consistent: np.ndarray
    m: int
    rmse_nq: float
    bias: float
    mse_theoretical_noisy: float
    mse_theoretical_consistent: float
    rmse_rq: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.v_true.size)

    def metrics(self) -> dict:
        out = {
            "epsilon": self.epsilon,
            "seed": self.seed,
            "h": self.sensitivity,
            "n": self.n,
            "m": self.m,
            "rmse_nq": self.rmse_nq,
            "bias": self.bias,
            "mse_theory_noisy": self.mse_theoretical_noisy,
            "mse_theory_consistent": self.mse_theoretical_consistent,
        }
        if self.rmse_rq is not None:
            out["rmse_rq"] = self.rmse_rq
        out.update(self.extra)
        return out


def run_release(tree: HierarchicalTree, counts, epsilon: float, seed=None, method: str = "gmc",
                egm: EquivalentGM | None = None) -> ReleaseReport:
    """Build, perturb and post-process one release of leaf ``counts``."""
    try:
        post = RELEASE_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown release method {method!r}") from None
    v_true = build_tree_values(counts, tree)
    v_noisy = add_laplace_noise(v_true, epsilon, tree, seed)
    v_bar = post(tree, v_noisy, egm)
    mse_noisy, mse_consistent = theoretical_mse(tree, epsilon)
    return ReleaseReport(
        epsilon=float(epsilon),
        sensitivity=tree.h,
        seed=seed,
        labels=tree.labels,
        v_true=v_true,
        v_noisy=v_noisy,
        v_consistent=v_bar,
        m=tree.m,
        rmse_nq=metric_rmse_nq(v_bar, v_true),
        bias=metric_bias(v_bar, tree),
        mse_theoretical_noisy=mse_noisy,
        mse_theoretical_consistent=mse_consistent,
    )


def monte_carlo_errors(tree: HierarchicalTree, v_true, epsilon: float, trials: int, seed=0,
                       egm: EquivalentGM | None = None):
    """Per-trial total squared errors ``(sum (v_noisy - v)^2, sum (v_bar - v)^2)``.

    Each trial draws from its own generator spawned from ``seed``.
    """
    if tree.n1 and egm is None:
        egm = construct_equivalent_gm(tree)
    v_true = np.asarray(v_true, dtype=np.float64)
    noisy = np.empty(trials)
    consistent = np.empty(trials)
    for t, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        v_noisy = add_laplace_noise(v_true, epsilon, tree, np.random.default_rng(child))
        v_bar = gmc_release(tree, v_noisy, egm)
        noisy[t] = np.sum((v_noisy - v_true) ** 2)
        consistent[t] = np.sum((v_bar - v_true) ** 2)
    return noisy, consistent
