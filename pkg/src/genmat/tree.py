"""Hierarchical trees numbered in descending order of height.

Every tree handled by the package is stored 0-based with the root at index 0
and nodes sorted so that ``i < j`` implies ``height[i] >= height[j]``.  Two
consequences are used throughout: a parent always precedes its children, and
the nodes of equal height form one contiguous block, so the k-order subtree
is a prefix of the node list.
"""

from __future__ import annotations

from collections.abc import Hashable, Mapping
from functools import cached_property

import numpy as np

from genmat.errors import CycleDetected, DimensionMismatch, KTooLarge, MultipleRoots, OrphanNode, TreeError


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class MappingMatrix:
    """0/1 injection matrix ``H_S`` defined by an ordered index set.

    Row ``i`` of ``H_S`` has its single one at column ``indices[i]``, so
    ``H_S @ v`` gathers ``v[indices]`` and ``H_S.T @ x`` scatters ``x`` into a
    zero vector of length ``target_size``.
    """

    def __init__(self, indices, target_size: int):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        target_size = int(target_size)
        if idx.size and (idx.min() < 0 or idx.max() >= target_size):
            raise DimensionMismatch(f"mapping indices must lie in [0, {target_size})")
        if np.unique(idx).size != idx.size:
            raise ValueError("mapping indices must be distinct")
        self.indices = _frozen(idx)
        self.target_size = target_size

    @property
    def source_size(self) -> int:
        return int(self.indices.size)

    @property
    def shape(self):
        return (self.source_size, self.target_size)

    def forward(self, v):
        """``H v``: gather, length ``target_size`` -> ``source_size``."""
        v = np.asarray(v)
        if v.shape[0] != self.target_size:
            raise DimensionMismatch(f"expected leading dimension {self.target_size}, got {v.shape[0]}")
        return v[self.indices]

    def transpose(self, x):
        """``H^T x``: scatter, length ``source_size`` -> ``target_size``."""
        x = np.asarray(x)
        if x.shape[0] != self.source_size:
            raise DimensionMismatch(f"expected leading dimension {self.source_size}, got {x.shape[0]}")
        out = np.zeros((self.target_size,) + x.shape[1:], dtype=np.result_type(x.dtype, np.float64))
        out[self.indices] = x
        return out

    def inverse(self, j: int):
        """Position ``i`` with ``indices[i] == j``, or None when j is not in the set."""
        hit = np.flatnonzero(self.indices == j)
        return int(hit[0]) if hit.size else None

    def to_dense(self):
        out = np.zeros(self.shape)
        out[np.arange(self.source_size), self.indices] = 1.0
        return out

    def __repr__(self):
        return f"MappingMatrix(source_size={self.source_size}, target_size={self.target_size})"


def apply_mapping(mapping: MappingMatrix, v, direction: str = "forward"):
    if direction == "forward":
        return mapping.forward(v)
    if direction == "transpose":
        return mapping.transpose(v)
    raise ValueError(f"direction must be 'forward' or 'transpose', not {direction!r}")


def _heights(parent):
    """Node heights by repeatedly peeling leaves; unreachable nodes stay 0."""
    n = parent.size
    height = np.zeros(n, dtype=np.int64)
    has_parent = parent >= 0
    remaining = np.bincount(parent[has_parent], minlength=n)
    frontier = np.flatnonzero(remaining == 0)
    level = 1
    while frontier.size:
        height[frontier] = level
        ps = parent[frontier]
        ps = ps[ps >= 0]
        if not ps.size:
            break
        uniq, counts = np.unique(ps, return_counts=True)
        remaining[uniq] -= counts
        frontier = uniq[remaining[uniq] == 0]
        level += 1
    return height


def _label_array(labels, n):
    if labels is None:
        return None
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size != n:
        # sequences of tuples etc. collapse badly through asarray
        arr = np.empty(n, dtype=object)
        arr[:] = list(labels)
    if arr.dtype.kind not in "iuU":
        arr = arr.astype(object)
    return arr


class HierarchicalTree:
    """A rooted tree in descending order of height.

    Attributes
    ----------
    parent : int64 array, ``parent[0] == -1`` and ``parent[i] < i`` otherwise.
    height : int64 array, 1 at leaves, ``1 + max(child heights)`` elsewhere.
    labels : array of external identifiers, one per node.
    permutation : MappingMatrix ``S`` with ``s_i`` the sorted index of the node
        given at input position ``i``; ``permutation.forward(v)`` returns a
        sorted-order vector in input order.

    Build instances with :func:`build_tree` or :meth:`from_parent_array`.
    """

    def __init__(self, parent, height, labels, permutation=None):
        self.parent = _frozen(np.asarray(parent, dtype=np.int64))
        self.height = _frozen(np.asarray(height, dtype=np.int64))
        self.labels = _frozen(labels)
        n = self.parent.size
        if permutation is None:
            permutation = MappingMatrix(np.arange(n), n)
        self.permutation = permutation

    # -- construction --------------------------------------------------

    @classmethod
    def from_parent_array(cls, parent, labels=None, keep_order: bool = False) -> HierarchicalTree:
        """Sort an arbitrarily numbered tree into descending order of height.

        ``parent`` holds 0-based parent positions with -1 for the root.  Ties
        in height are broken by ascending label (numeric for integer labels,
        lexicographic for strings); without labels, by input position, and
        the labels become the 1-based input positions.  With ``keep_order``
        an input that already has non-increasing heights is left as given.
        """
        parent = np.asarray(parent, dtype=np.int64).reshape(-1)
        n = parent.size
        if n == 0:
            raise TreeError("a tree needs at least one node")
        roots = np.flatnonzero(parent < 0)
        if roots.size > 1:
            raise MultipleRoots(f"{roots.size} nodes have no parent")
        if roots.size == 0:
            raise CycleDetected("no root: every node has a parent")
        if parent.max() >= n:
            raise OrphanNode("parent index out of range")
        if np.any(parent == np.arange(n)):
            raise CycleDetected("a node is its own parent")

        height = _heights(parent)
        if np.any(height == 0):
            raise CycleDetected(f"{int(np.count_nonzero(height == 0))} nodes lie on or below a cycle")

        labels = _label_array(labels, n)
        if keep_order and np.all(height[:-1] >= height[1:]):
            order = np.arange(n)
            new_labels = order + 1 if labels is None else labels
        elif labels is None:
            order = np.argsort(-height, kind="stable")
            new_labels = order + 1
        else:
            by_label = np.argsort(labels, kind="stable")
            order = by_label[np.argsort(-height[by_label], kind="stable")]
            new_labels = labels[order]

        new_of_old = np.empty(n, dtype=np.int64)
        new_of_old[order] = np.arange(n)
        old_parent = parent[order]
        new_parent = np.where(old_parent >= 0, new_of_old[np.maximum(old_parent, 0)], -1)
        return cls(new_parent, height[order], new_labels, MappingMatrix(new_of_old, n))

    # -- sizes -----------------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.parent.size)

    def __len__(self):
        return self.n

    @property
    def h(self) -> int:
        """Height of the tree (height of the root)."""
        return int(self.height[0])

    @cached_property
    def order_sizes(self):
        """``order_sizes[k]`` = n_k, the node count of the k-order subtree, k = 0..h."""
        counts = np.bincount(self.height, minlength=self.h + 1)
        # n_k = #{i : h_i > k}
        return _frozen(self.n - np.cumsum(counts))

    def n_k(self, k: int) -> int:
        if k < 0:
            raise ValueError("k must be non-negative")
        return 0 if k >= self.h else int(self.order_sizes[k])

    @property
    def n1(self) -> int:
        """Number of non-leaf nodes."""
        return self.n_k(1)

    @property
    def m(self) -> int:
        """Number of leaves."""
        return self.n - self.n1

    @cached_property
    def leaf_map(self) -> MappingMatrix:
        return MappingMatrix(np.arange(self.n1, self.n), self.n)

    @property
    def leaves(self):
        return self.leaf_map.indices

    def level(self, k: int) -> slice:
        """Slice of the nodes whose height equals ``k``."""
        if not 1 <= k <= self.h:
            raise ValueError(f"height {k} outside 1..{self.h}")
        return slice(int(self.order_sizes[k]), int(self.order_sizes[k - 1]))

    @cached_property
    def parent_windows(self):
        """Per-level parent ranges and offsets.

        Returns ``(windows, offsets)``: the parents of height-k nodes lie in
        ``windows[k][0] .. windows[k][1] - 1`` and ``offsets[i]`` is the
        position of ``parent[i]`` inside its node's window (0 at the root).
        """
        windows = [(0, 0)] * (self.h + 1)
        offsets = np.zeros(self.n, dtype=np.int64)
        for k in range(1, self.h):
            sl = self.level(k)
            ps = self.parent[sl]
            lo = int(ps.min())
            windows[k] = (lo, int(ps.max()) + 1)
            offsets[sl] = ps - lo
        return windows, _frozen(offsets)

    # -- relations ---------------------------------------------------------

    @cached_property
    def child_counts(self):
        return _frozen(np.bincount(self.parent[1:], minlength=self.n))

    @cached_property
    def _children_csr(self):
        order = np.argsort(self.parent[1:], kind="stable") + 1
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.child_counts, out=ptr[1:])
        return ptr, order

    def children(self, i: int):
        ptr, kids = self._children_csr
        return kids[ptr[i]:ptr[i + 1]]

    def ancestors(self, i: int):
        """Proper ancestors of ``i``, nearest first."""
        out = []
        p = int(self.parent[i])
        while p >= 0:
            out.append(p)
            p = int(self.parent[p])
        return out

    @cached_property
    def _index_of_label(self):
        return {lab: i for i, lab in enumerate(self.labels.tolist())}

    def index_of(self, label) -> int:
        try:
            return self._index_of_label[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def same_structure(self, other: HierarchicalTree) -> bool:
        return self.n == other.n and np.array_equal(self.parent, other.parent)

    def __eq__(self, other):
        if not isinstance(other, HierarchicalTree):
            return NotImplemented
        return self.same_structure(other) and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def __repr__(self):
        return f"HierarchicalTree(n={self.n}, n1={self.n1}, h={self.h})"


def build_tree(parent_links: Mapping[Hashable, Hashable | None]) -> HierarchicalTree:
    """Build a tree from a ``{label: parent_label}`` map; the root maps to None."""
    labels = list(parent_links)
    if not labels:
        raise TreeError("a tree needs at least one node")
    index = {lab: i for i, lab in enumerate(labels)}
    parent = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        p = parent_links[lab]
        if p is None:
            parent[i] = -1
        elif p in index:
            parent[i] = index[p]
        else:
            raise OrphanNode(f"node {lab!r} has unknown parent {p!r}")
    return HierarchicalTree.from_parent_array(parent, labels)


def k_order_subtree(tree: HierarchicalTree, k: int) -> HierarchicalTree:
    """Induced subtree on the nodes of height greater than ``k``.

    Indices 0..n_k-1 are kept, so the result is a prefix of ``tree``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k >= tree.h:
        raise KTooLarge(f"k={k} removes every node of a tree of height {tree.h}")
    if k == 0:
        return tree
    nk = tree.n_k(k)
    return HierarchicalTree(tree.parent[:nk], tree.height[:nk] - k, tree.labels[:nk])
