"""Synthetic trees with Poisson leaf counts."""

from __future__ import annotations

import numpy as np

from genmat.errors import InvalidParam
from genmat.tree import HierarchicalTree

DEFAULT_LAMBDA = 100.0
DEFAULT_FANOUTS = {2: 0.4, 3: 0.3, 4: 0.2, 5: 0.1}


def _counts(tree, lam, rng):
    if not lam > 0:
        raise InvalidParam(f"lambda must be positive, got {lam}")
    return rng.poisson(lam, size=tree.m).astype(np.float64)


def complete_tree(height: int, fanout: int) -> HierarchicalTree:
    """Complete ``fanout``-ary tree with ``height`` levels, numbered breadth first."""
    if height < 1:
        raise InvalidParam(f"height must be at least 1, got {height}")
    if fanout < 2:
        raise InvalidParam(f"fanout must be at least 2, got {fanout}")
    n = (fanout ** height - 1) // (fanout - 1)
    parent = (np.arange(n, dtype=np.int64) - 1) // fanout
    parent[0] = -1
    return HierarchicalTree.from_parent_array(parent)


def gen_complete_tree(height: int, fanout: int = 2, lam: float = DEFAULT_LAMBDA, seed=None):
    """Complete k-ary tree and i.i.d. Poisson(lam) leaf counts (in leaf order)."""
    tree = complete_tree(height, fanout)
    return tree, _counts(tree, lam, np.random.default_rng(seed))


def random_fanout_parents(m: int, proportions=None, rng=None):
    """Parent array (-1 for the root) grouping ``m`` leaves bottom-up.

    Each level is cut left to right into consecutive groups whose sizes are
    drawn from ``proportions``; a group that would overrun the level takes
    the remainder together with the group before it.  Every group becomes a
    parent on the next level until a single root remains.  Leaves come first
    in the returned array.
    """
    if m < 1:
        raise InvalidParam(f"need at least one leaf, got {m}")
    proportions = DEFAULT_FANOUTS if proportions is None else dict(proportions)
    sizes = np.array(sorted(proportions), dtype=np.int64)
    probs = np.array([proportions[k] for k in sorted(proportions)], dtype=np.float64)
    if sizes.size == 0 or sizes.min() < 2:
        raise InvalidParam("fan-outs must be integers >= 2")
    if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
        raise InvalidParam("fan-out proportions must be non-negative and sum to 1")
    rng = np.random.default_rng(rng)

    parents = [np.full(m, -1, dtype=np.int64)]
    level_size, total = m, m
    while level_size > 1:
        draws = rng.choice(sizes, size=level_size // int(sizes.min()) + 1, p=probs)
        ends = np.cumsum(draws)
        groups = int(np.searchsorted(ends, level_size, side="right"))
        bounds = ends[:groups].tolist()
        if not bounds:
            bounds = [level_size]
        elif bounds[-1] != level_size:
            # leftover block joins the last full group
            bounds[-1] = level_size
        group_of = np.repeat(np.arange(len(bounds)), np.diff(np.concatenate([[0], bounds])))
        parents[-1][:] = total + group_of
        level_size = len(bounds)
        total += level_size
        parents.append(np.full(level_size, -1, dtype=np.int64))
    return np.concatenate(parents)


def gen_random_fanout_tree(m: int, proportions=None, lam: float = DEFAULT_LAMBDA, seed=None):
    """Random fan-out tree over ``m`` leaves with Poisson(lam) leaf counts."""
    rng = np.random.default_rng(seed)
    tree = HierarchicalTree.from_parent_array(random_fanout_parents(m, proportions, rng))
    return tree, _counts(tree, lam, rng)


def random_tree(n: int, rng, max_children: int | None = None) -> HierarchicalTree:
    """Uniform random recursive tree on ``n`` nodes (each node picks an earlier parent).

    With ``max_children`` the parent is drawn among earlier nodes that still
    have room, which yields bushier, shallower trees.
    """
    rng = np.random.default_rng(rng)
    parent = np.full(n, -1, dtype=np.int64)
    if max_children is None:
        for i in range(1, n):
            parent[i] = rng.integers(0, i)
    else:
        counts = np.zeros(n, dtype=np.int64)
        open_nodes = [0]
        for i in range(1, n):
            k = int(rng.integers(0, len(open_nodes)))
            p = open_nodes[k]
            parent[i] = p
            counts[p] += 1
            if counts[p] == max_children:
                open_nodes[k] = open_nodes[-1]
                open_nodes.pop()
            open_nodes.append(i)
    perm = rng.permutation(n)
    # shuffle the input numbering so that sorting is exercised
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    shuffled = np.full(n, -1, dtype=np.int64)
    nonroot = parent >= 0
    shuffled[inv[nonroot]] = inv[parent[nonroot]]
    shuffled[inv[~nonroot]] = -1
    return HierarchicalTree.from_parent_array(shuffled)
