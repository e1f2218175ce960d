"""Error and consistency measures for released trees."""

from __future__ import annotations

import math

import numpy as np

from genmat.errors import DimensionMismatch, InvalidParam, QTooLarge

DEFAULT_RANGE_QUERIES = 100_000


def metric_rmse_nq(v_out, v_true) -> float:
    """Root mean square error over all node queries."""
    v_out = np.asarray(v_out, dtype=np.float64)
    v_true = np.asarray(v_true, dtype=np.float64)
    if v_out.shape != v_true.shape:
        raise DimensionMismatch(f"shapes differ: {v_out.shape} vs {v_true.shape}")
    return float(np.sqrt(np.mean((v_out - v_true) ** 2)))


def sample_ranges(m: int, q: int, seed=None):
    """``q`` distinct leaf ranges ``[a, b]`` with ``a < b``, 0-based and inclusive.

    Endpoint pairs are drawn uniformly and duplicates rejected until ``q``
    distinct ranges are collected.
    """
    if m < 2:
        raise InvalidParam("range queries need at least two leaves")
    total = math.comb(m, 2)
    if q > total:
        raise QTooLarge(f"q={q} exceeds the {total} available ranges")
    rng = np.random.default_rng(seed)
    seen = set()
    out_a, out_b = [], []
    while len(seen) < q:
        need = q - len(seen)
        batch = max(2 * need, 64)
        a = rng.integers(0, m, size=batch)
        b = rng.integers(0, m, size=batch)
        keep = a != b
        lo = np.minimum(a, b)[keep].tolist()
        hi = np.maximum(a, b)[keep].tolist()
        for x, y in zip(lo, hi):
            key = x * m + y
            if key in seen:
                continue
            seen.add(key)
            out_a.append(x)
            out_b.append(y)
            if len(seen) == q:
                break
    return np.array(out_a, dtype=np.int64), np.array(out_b, dtype=np.int64)


def range_errors(x_out, x_true, a, b):
    """Error of every range sum ``sum(x_out[a:b+1]) - sum(x_true[a:b+1])``."""
    diff = np.asarray(x_out, dtype=np.float64) - np.asarray(x_true, dtype=np.float64)
    prefix = np.concatenate([[0.0], np.cumsum(diff)])
    return prefix[np.asarray(b) + 1] - prefix[np.asarray(a)]


def metric_rmse_rq(x_out, x_true, q: int = DEFAULT_RANGE_QUERIES, range_seed=None) -> float:
    """Root mean square error over ``q`` random distinct range queries on the leaves."""
    x_out = np.asarray(x_out, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    if x_out.shape != x_true.shape or x_out.ndim != 1:
        raise DimensionMismatch(f"shapes differ: {x_out.shape} vs {x_true.shape}")
    a, b = sample_ranges(x_true.size, q, range_seed)
    return float(np.sqrt(np.mean(range_errors(x_out, x_true, a, b) ** 2)))


def metric_bias(v_out, tree) -> float:
    """Root mean square of the consistency residual ``M^T v`` over the non-leaf nodes."""
    v_out = np.asarray(v_out, dtype=np.float64)
    if v_out.shape != (tree.n,):
        raise DimensionMismatch(f"expected {tree.n} node values, got shape {v_out.shape}")
    if tree.n1 == 0:
        return 0.0
    child_sums = np.bincount(tree.parent[1:], weights=v_out[1:], minlength=tree.n1)
    delta = v_out[:tree.n1] - child_sums[:tree.n1]
    return float(np.sqrt(np.mean(delta ** 2)))
