import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import trees
from genmat import (
    ConstraintMatrix,
    add_laplace_noise,
    build_tree,
    build_tree_values,
    construct_equivalent_gm,
    dense_oracle_release,
    gmc_release,
    gmc_release_nosqrt,
    inverse_build,
    run_release,
    theoretical_mse,
)
from genmat.datagen import complete_tree
from genmat.errors import KTooLarge, NonPositiveEpsilon, SizeCapExceeded
from genmat.metrics import metric_bias
from genmat.release import laplace_scale, sample_laplace

RELEASES = [gmc_release, gmc_release_nosqrt, dense_oracle_release]


def test_constraint_matrix_examples(star, five, chain3):
    np.testing.assert_array_equal(ConstraintMatrix(star).to_dense(), [[1], [-1], [-1]])
    for t, gram in [(five, [[3, -1], [-1, 3]]), (chain3, [[2, -1], [-1, 2]])]:
        M = ConstraintMatrix(t)
        np.testing.assert_array_equal(M.to_dense().T @ M.to_dense(), gram)
        np.testing.assert_array_equal(M.gram(), gram)


def test_build_and_inverse(five):
    v = build_tree_values([6, 4, 3], five)
    assert v.tolist() == [13, 7, 6, 4, 3]
    assert inverse_build(v, five).tolist() == [6, 4, 3]
    assert not build_tree_values(np.zeros(3), five).any()
    single = build_tree({"x": None})
    assert inverse_build(np.array([4.0]), single).tolist() == [4.0]


def test_laplace_scale_and_errors():
    t = complete_tree(3, 2)
    assert laplace_scale(t, 1.5) == 2.0
    for eps in (0.0, -1.0):
        with pytest.raises(NonPositiveEpsilon):
            laplace_scale(t, eps)


def test_laplace_variance():
    draws = sample_laplace(2.0, 1_000_000, np.random.default_rng(123))
    assert abs(draws.var() / 8.0 - 1) < 0.02
    assert abs(draws.mean()) < 0.01


def test_noise_determinism(five):
    v = build_tree_values([6, 4, 3], five)
    a = add_laplace_noise(v, 1.0, five, 7)
    assert np.array_equal(a, add_laplace_noise(v, 1.0, five, 7))
    assert not np.array_equal(a, add_laplace_noise(v, 1.0, five, 8))


def test_equivalent_gm_examples(star, chain3, five):
    e = construct_equivalent_gm(star)
    np.testing.assert_allclose(e.theta, [2])
    np.testing.assert_allclose(e.gm.node_weights, [np.sqrt(3)])
    np.testing.assert_allclose(e.theta_prime, [3])
    e = construct_equivalent_gm(chain3)
    np.testing.assert_allclose(e.theta, [0.5, 1])
    np.testing.assert_allclose(e.gm.node_weights, [np.sqrt(1.5), np.sqrt(2)])
    np.testing.assert_allclose(e.gm.edge_weights[1], 1 / np.sqrt(2))
    e = construct_equivalent_gm(five)
    np.testing.assert_allclose(e.theta, [5 / 3, 2])
    np.testing.assert_allclose(e.theta_prime, [8 / 3, 3])
    np.testing.assert_allclose(e.gm.node_weights, [np.sqrt(8 / 3), np.sqrt(3)])
    np.testing.assert_allclose(e.gm.edge_weights[1], 1 / np.sqrt(3))
    G = e.gm.to_dense()
    np.testing.assert_allclose(G.T @ G, [[3, -1], [-1, 3]], atol=1e-14)
    with pytest.raises(KTooLarge):
        construct_equivalent_gm(build_tree({"x": None}))


@pytest.mark.parametrize("release", RELEASES)
def test_worked_releases(release, five, star):
    np.testing.assert_allclose(release(five, np.array([20.0, 9, 6, 4, 3])),
                               [17.875, 9.75, 8.125, 5.375, 4.375], atol=1e-12)
    np.testing.assert_allclose(release(star, np.array([10.0, 3, 4])), [9, 4, 5], atol=1e-12)
    consistent = build_tree_values([6.0, 4, 3], five)
    np.testing.assert_array_equal(release(five, consistent), consistent)


def test_single_node_release():
    t = build_tree({"x": None})
    assert gmc_release(t, np.array([3.5])).tolist() == [3.5]


def test_oracle_cap(five):
    with pytest.raises(SizeCapExceeded):
        dense_oracle_release(five, np.ones(5), cap=4)


def test_theoretical_mse():
    t = complete_tree(10, 2)
    assert theoretical_mse(t, 1.0) == (204600.0, 102400.0)
    assert theoretical_mse(t, 2.0) == (51150.0, 25600.0)
    assert theoretical_mse(build_tree({"x": None}), 0.5) == (8.0, 8.0)


@settings(max_examples=80, deadline=None)
@given(trees(min_n=2, max_n=80), st.integers(0, 2**32 - 1))
def test_projection_properties(t, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(scale=10, size=t.n)
    out = gmc_release(t, v)
    M = oracles.constraint_matrix(t.parent.tolist(), t.n1)
    scale = 1 + np.max(np.abs(v))
    assert np.max(np.abs(out - oracles.dense_projection(M, v))) <= 1e-8 * scale
    assert np.max(np.abs(gmc_release_nosqrt(t, v) - out)) <= 1e-10 * scale
    assert metric_bias(out, t) <= 1e-9 * scale
    np.testing.assert_allclose(gmc_release(t, out), out, atol=1e-9 * scale)
    for _ in range(5):
        w = build_tree_values(rng.normal(scale=10, size=t.m), t)
        assert np.linalg.norm(out - v) <= np.linalg.norm(w - v) + 1e-9 * scale
    G = construct_equivalent_gm(t).gm.to_dense()
    assert np.max(np.abs(G.T @ G - M.T @ M)) <= 1e-9 * t.n1


def test_equivalent_gm_matches_cholesky_oracle():
    rng = np.random.default_rng(5)
    from genmat.datagen import random_tree

    for _ in range(20):
        t = random_tree(int(rng.integers(3, 120)), rng, max_children=int(rng.integers(2, 6)))
        if t.n1 == 0:
            continue
        G = oracles.equivalent_weights(t.parent.tolist(), t.n1)
        np.testing.assert_allclose(construct_equivalent_gm(t).gm.to_dense(), G, atol=1e-10)
        np.testing.assert_allclose(construct_equivalent_gm(t, mode="scalar").theta,
                                   construct_equivalent_gm(t, mode="levels").theta, rtol=1e-14)


def test_run_release_determinism(five):
    a = run_release(five, [6, 4, 3], 1.0, seed=3)
    b = run_release(five, [6, 4, 3], 1.0, seed=3)
    for field in ("v_true", "v_noisy", "v_consistent"):
        assert np.array_equal(getattr(a, field), getattr(b, field))
    assert a.metrics() == b.metrics()
    assert set(a.metrics()) >= {"epsilon", "seed", "h", "n", "m", "rmse_nq", "bias"}
    assert run_release(five, [6, 4, 3], 1.0, seed=3, method="nosqrt").bias <= 1e-9
