import numpy as np
import pytest
import scipy.sparse as sp

from ensc.core import ElasticNetProblem, normalize_columns
from ensc.elastic_net import InnerSolverConfig, oracle_region_mask, solve_full
from ensc.errors import InvalidProblem, LambdaZero, OrthogonalPoint
from ensc.orgen import OrgenConfig
from ensc.selfexpr import (Affinity, EnscConfig, SelfExpressiveModel, build_affinity,
                           gamma_zero, self_expressive)
from ensc.synth import random_subspaces, random_unit_sphere

EXACT = OrgenConfig(inner=InnerSolverConfig(tolerance=1e-12))


def test_config_invariants():
    with pytest.raises(InvalidProblem):
        EnscConfig(alpha=1.0)
    with pytest.raises(LambdaZero):
        EnscConfig(lam=0.0)
    EnscConfig(lam=0.0, gamma=5.0)


def test_gamma_zero_examples():
    d = normalize_columns(np.eye(3))
    assert gamma_zero(np.array([1.0, 0.0, 0.0]), d, 0.7) == pytest.approx(0.7)
    A = normalize_columns(np.array([[0.45, 0.3], [np.sqrt(1 - 0.45 ** 2), 0.0],
                                    [0.0, np.sqrt(1 - 0.09)]]))
    assert gamma_zero(np.array([1.0, 0.0, 0.0]), A, 0.9) == pytest.approx(2.0, rel=1e-12)


def test_gamma_zero_errors():
    d = normalize_columns(np.eye(3)[:, :2])
    with pytest.raises(OrthogonalPoint):
        gamma_zero(np.array([0.0, 0.0, 1.0]), d, 0.5)
    with pytest.raises(LambdaZero):
        gamma_zero(np.array([1.0, 0.0, 0.0]), d, 0.0)


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9, 1.0])
def test_gamma_zero_bisection_oracle(rng, lam):
    A = normalize_columns(rng.standard_normal((10, 30)))
    b = rng.standard_normal(10)
    b /= np.linalg.norm(b)
    g0 = gamma_zero(b, A, lam)
    below = solve_full(ElasticNetProblem(b, A, lam, 0.999 * g0))
    above = solve_full(ElasticNetProblem(b, A, lam, 1.001 * g0),
                       InnerSolverConfig(tolerance=1e-14))
    assert below.support.size == 0
    assert np.max(np.abs(above.coefficients)) > 0
    # independent bisection for the transition point
    lo, hi = 0.5 * g0, 2.0 * g0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        c = solve_full(ElasticNetProblem(b, A, lam, mid),
                       InnerSolverConfig(tolerance=1e-14)).coefficients
        if np.any(np.abs(c) > 0):
            hi = mid
        else:
            lo = mid
    assert hi == pytest.approx(g0, rel=1e-3)


def test_two_identical_columns_closed_form():
    a = np.array([0.6, 0.8])
    X = normalize_columns(np.column_stack([a, a]))
    model = self_expressive(X, EnscConfig(lam=0.5, alpha=3.0, orgen=EXACT))
    gamma = 3.0 * 0.5
    expected = (gamma - 0.5) / (1 - 0.5 + gamma)
    C = model.coefficients.toarray()
    assert C[1, 0] == pytest.approx(expected, abs=1e-10)
    assert C[0, 1] == pytest.approx(expected, abs=1e-10)
    np.testing.assert_allclose(model.gammas, gamma)


def test_orthogonal_columns_all_flagged():
    X = normalize_columns(np.eye(4))
    model = self_expressive(X, EnscConfig(lam=0.5))
    assert model.coefficients.nnz == 0
    assert [code for _, code in model.failures] == [OrthogonalPoint.code] * 4


def test_diagonal_zero_and_column_support(rng):
    X = random_unit_sphere(8, 60, seed=3)
    model = self_expressive(X, EnscConfig(lam=0.7))
    C = model.coefficients.toarray()
    np.testing.assert_array_equal(np.diag(C), 0.0)
    np.testing.assert_array_equal(model.support_sizes, (C != 0).sum(axis=0))


def test_columns_match_direct_solves(rng):
    X = random_unit_sphere(10, 40, seed=1)
    model = self_expressive(X, EnscConfig(lam=0.8, alpha=5.0, orgen=EXACT))
    C = model.coefficients.toarray()
    for j in (0, 17, 39):
        b = X.matrix[:, j]
        p = ElasticNetProblem(b, X.without(j), 0.8, model.gammas[j])
        ref = solve_full(p).coefficients
        np.testing.assert_allclose(np.delete(C[:, j], j), ref, atol=1e-8)


def test_worker_count_does_not_change_result():
    X = random_unit_sphere(6, 40, seed=5)
    cfg = EnscConfig(lam=0.9)
    one = self_expressive(X, cfg, workers=1)
    two = self_expressive(X, cfg, workers=2)
    assert (one.coefficients != two.coefficients).nnz == 0
    np.testing.assert_array_equal(one.gammas, two.gammas)


def test_support_size_non_increasing_in_lambda():
    lams = [0.05, 0.3, 0.6, 0.9, 0.999]
    means = np.zeros(len(lams))
    for seed in range(10):
        X = random_unit_sphere(10, 80, seed=seed)
        for i, lam in enumerate(lams):
            model = self_expressive(X, EnscConfig(lam=lam, alpha=3.0, orgen=EXACT))
            means[i] += model.support_sizes.mean() / 10
    assert np.all(np.diff(means) <= 0), means


def test_out_of_region_atoms_give_preserving_support():
    ds = random_subspaces(12, 3, 3, 25, seed=7)
    lam = 0.9
    model = self_expressive(ds.X, EnscConfig(lam=lam, alpha=5.0, orgen=EXACT))
    C = model.coefficients
    A = ds.X.matrix
    checked = 0
    for j in range(ds.X.N):
        same = np.flatnonzero((ds.truth == ds.truth[j]) & (np.arange(ds.X.N) != j))
        other = np.flatnonzero(ds.truth != ds.truth[j])
        p = ElasticNetProblem(A[:, j], ds.X.subset(same), lam, model.gammas[j])
        delta = solve_full(p, InnerSolverConfig(tolerance=1e-12)).oracle_point
        if not np.any(delta) or np.any(oracle_region_mask(A[:, other], delta, lam)):
            continue
        rows = C.indices[C.indptr[j]:C.indptr[j + 1]]
        assert np.all(ds.truth[rows] == ds.truth[j])
        checked += 1
    assert checked > 0


# affinity -------------------------------------------------------------------

def _model(C):
    C = sp.csc_matrix(C)
    n = C.shape[0]
    return SelfExpressiveModel(C, np.ones(n), np.ones(n), np.diff(C.indptr))


def test_affinity_of_zero():
    W = build_affinity(_model(np.zeros((4, 4))))
    assert W.values.size == 0
    np.testing.assert_array_equal(W.to_dense(), 0.0)


def test_affinity_single_entry():
    C = np.zeros((6, 6))
    C[2, 5] = -0.7
    W = build_affinity(_model(C)).to_dense()
    assert W[2, 5] == pytest.approx(0.7) and W[5, 2] == pytest.approx(0.7)
    assert np.count_nonzero(W) == 2


def test_affinity_block_pattern_and_symmetry(rng):
    truth = np.repeat([0, 1, 2], 4)
    C = rng.standard_normal((12, 12)) * (truth[:, None] == truth[None, :])
    np.fill_diagonal(C, 0.0)
    aff = build_affinity(_model(C))
    W = aff.to_dense()
    np.testing.assert_array_equal(W, W.T)
    assert np.all(W >= 0)
    np.testing.assert_array_equal(np.diag(W), 0.0)
    np.testing.assert_array_equal(W != 0, (np.abs(C) + np.abs(C.T)) != 0)
    order = np.lexsort((aff.cols, aff.rows))
    np.testing.assert_array_equal(order, np.arange(order.size))


def test_affinity_from_matrix_drops_diagonal():
    M = np.array([[3.0, 1.0], [1.0, 2.0]])
    aff = Affinity.from_matrix(M)
    np.testing.assert_array_equal(aff.to_dense(), [[0.0, 1.0], [1.0, 0.0]])
