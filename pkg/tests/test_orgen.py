import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_problem
from ensc.core import ElasticNetProblem, normalize_columns
from ensc.elastic_net import ridge_closed_form, solve_full
from ensc.errors import DegenerateOracle, InvalidProblem, MaxOuterIterationsExceeded
from ensc.orgen import (OrgenConfig, active_set_update, init_active_set, orgen_solve)
from ensc.theory import nonmonotone_ratio_data


def test_config_invariants():
    with pytest.raises(InvalidProblem):
        OrgenConfig(init_size=0)
    with pytest.raises(InvalidProblem):
        OrgenConfig(init_size=10, max_active=5)
    c = OrgenConfig.clustering()
    assert c.max_outer_iterations == 2 and not c.exact and c.max_active == 3000
    assert OrgenConfig().lambda_one(1.0) and not OrgenConfig().lambda_one(0.99)


# initialization -------------------------------------------------------------

def test_init_full_when_l_covers_n(rng):
    p = random_problem(rng, 5, 8, 0.5, 3.0)
    np.testing.assert_array_equal(init_active_set(p, OrgenConfig(init_size=8)), np.arange(8))
    np.testing.assert_array_equal(init_active_set(p, OrgenConfig(init_size=50)), np.arange(8))


def test_init_orthonormal_exact_atom(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    p = ElasticNetProblem(Q[:, 3].copy(), normalize_columns(Q), 0.5, 10.0)
    np.testing.assert_array_equal(init_active_set(p, OrgenConfig(init_size=1)), [3])


def test_init_on_nonmonotone_ratio_data_matches_enumeration():
    x, atoms = nonmonotone_ratio_data()
    p = ElasticNetProblem(x, atoms, 0.9, 10.0)
    c = ridge_closed_form(p)
    best = max(range(4), key=lambda j: (abs(c[j]), -j))
    np.testing.assert_array_equal(init_active_set(p, OrgenConfig(init_size=1)), [best])


def test_init_tie_goes_to_lower_index():
    # two identical atoms get identical ridge weights
    A = normalize_columns(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.1, 0.0, 0.1]]))
    b = A.matrix[:, 0].copy()
    p = ElasticNetProblem(b, A, 0.5, 5.0)
    np.testing.assert_array_equal(init_active_set(p, OrgenConfig(init_size=1)), [0])


# active set update ----------------------------------------------------------

def test_update_empty_region_terminates_with_zero():
    A = normalize_columns(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    p = ElasticNetProblem(np.array([0.6, 0.0, 0.8]), A, 0.9, 1.0)
    assert active_set_update(p.gamma * p.b, A, [0], 0.9).size == 0
    sol, trace = orgen_solve(p, OrgenConfig(init_size=1))
    np.testing.assert_array_equal(sol.coefficients, 0.0)
    assert trace.terminated


def test_update_planted_pair():
    delta = np.array([2.0, 0.0, 0.0])
    lam = 0.5
    # |2 cos(angle)| > 0.5  <=>  angle < arccos(0.25) ~ 1.318
    angles = [1.5, 1.4, 0.3, 1.45, 1.35, 1.45, 1.5, 0.9, 1.35, 1.55]
    atoms = np.array([[np.cos(a), np.sin(a), 0.0] for a in angles]).T
    expected = [j for j, a in enumerate(angles) if 2 * abs(np.cos(a)) > lam]
    d = normalize_columns(atoms)
    got = active_set_update(delta, d, [], lam)
    np.testing.assert_array_equal(got, expected)
    assert list(got) == [2, 7]


def test_update_capped_keeps_old_and_admits_best_new():
    delta = np.array([1.0, 0.0])
    angles = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 1.5])
    d = normalize_columns(np.vstack([np.cos(angles), np.sin(angles)]))
    cfg = OrgenConfig(init_size=2, max_active=2)
    got = active_set_update(delta, d, [1, 3], 0.5, cfg)
    # old in-region atoms 1 and 3 stay; the best new atom (0) is admitted
    np.testing.assert_array_equal(got, [0, 1, 3])


def test_update_lambda_one_merges_support():
    delta = np.array([1.0, 0.0])
    d = normalize_columns(np.array([[1.0, 0.0], [0.0, 1.0]]))
    got = active_set_update(delta, d, [0, 1], 1.0, support=[1])
    np.testing.assert_array_equal(got, [1])


def test_update_degenerate():
    d = normalize_columns(np.eye(2))
    with pytest.raises(DegenerateOracle):
        active_set_update(np.zeros(2), d, [0], 0.5)


# solver ---------------------------------------------------------------------

def test_full_initial_set_is_one_iteration(rng):
    p = random_problem(rng, 10, 30, 0.6, 20.0)
    sol, trace = orgen_solve(p, OrgenConfig(init_size=30))
    assert trace.outer_iterations == 1
    np.testing.assert_allclose(sol.coefficients, solve_full(p).coefficients, atol=1e-10)


@pytest.mark.parametrize("lam", [0.9, 0.3])
def test_matches_full_solver(rng, lam):
    p = random_problem(rng, 50, 2000, lam, 50.0)
    sol, trace = orgen_solve(p)
    assert trace.terminated
    assert np.max(np.abs(sol.coefficients - solve_full(p).coefficients)) <= 1e-6
    assert sol.optimality_residual <= 1e-9


def test_unit_circle_structure():
    theta = np.linspace(0, np.pi, 100, endpoint=False)
    d = normalize_columns(np.vstack([np.cos(theta), np.sin(theta)]))
    b = np.array([np.cos(0.7), np.sin(0.7)])
    sizes = {}
    for lam in (0.9, 0.3):
        p = ElasticNetProblem(b, d, lam, 50.0)
        sol, _ = orgen_solve(p, OrgenConfig(init_size=5))
        g = np.abs(d.matrix.T @ sol.oracle_point)
        assert np.all(g[sol.support] > lam)
        sizes[lam] = sol.support.size
    assert sizes[0.3] > sizes[0.9]


@given(st.integers(0, 100_000), st.sampled_from([0.1, 0.5, 0.9, 1.0]),
       st.integers(1, 20))
@settings(max_examples=30, deadline=None)
def test_trace_strictly_decreasing_and_exact(seed, lam, l):
    p = random_problem(np.random.default_rng(seed), 20, 300, lam, 40.0)
    sol, trace = orgen_solve(p, OrgenConfig(init_size=l))
    f = trace.objectives
    assert np.all(np.diff(f) < 1e-12)
    assert trace.terminated and trace.outer_iterations <= 100
    # no atom outside the support lies strictly inside the final region
    g = np.abs(p.A.T @ sol.oracle_point)
    off = np.setdiff1d(np.arange(300), sol.support)
    assert np.all(g[off] <= lam + 1e-8)


def test_capped_mode_reaches_same_solution(rng):
    p = random_problem(rng, 40, 1500, 0.5, 50.0)
    sol, trace = orgen_solve(p, OrgenConfig(init_size=10, max_active=40))
    assert trace.terminated
    assert np.max(np.abs(sol.coefficients - solve_full(p).coefficients)) <= 1e-6


def test_outer_limit_raises_with_trace(rng):
    p = random_problem(rng, 30, 800, 0.3, 50.0)
    with pytest.raises(MaxOuterIterationsExceeded) as info:
        orgen_solve(p, OrgenConfig(init_size=1, max_outer_iterations=1))
    assert info.value.trace.outer_iterations == 1
    assert info.value.best.coefficients.shape == (800,)


def test_trace_csv(rng):
    p = random_problem(rng, 10, 100, 0.5, 20.0)
    _, trace = orgen_solve(p, OrgenConfig(init_size=3))
    text = trace.to_csv()
    lines = text.split("\n")
    assert lines[0] == "iteration,active_size,objective,support_size,residual"
    assert len([s for s in lines if s]) == trace.outer_iterations + 1
    assert "\r" not in text
    buf = io.StringIO()
    trace.to_csv(buf)
    assert buf.getvalue() == text


def test_lambda_one_delta_unique(rng):
    p = random_problem(rng, 15, 400, 1.0, 30.0)
    a, _ = orgen_solve(p, OrgenConfig(init_size=5))
    b = solve_full(p)
    np.testing.assert_allclose(a.oracle_point, b.oracle_point, atol=1e-7)


def _plain_update_oracle(scores, lam):
    return [j for j in range(scores.size) if scores[j] > lam + 1e-9]


@given(st.integers(0, 10_000), st.integers(1, 6))
@settings(max_examples=50, deadline=None)
def test_capped_update_against_enumeration(seed, cap_extra):
    rng = np.random.default_rng(seed)
    d = normalize_columns(rng.standard_normal((4, 25)))
    delta = 1.5 * rng.standard_normal(4)
    lam = 0.6
    active = np.sort(rng.choice(25, size=5, replace=False))
    cfg = OrgenConfig(init_size=5, max_active=5 + cap_extra - 1)
    got = active_set_update(delta, d, active, lam, cfg)
    scores = np.abs(d.matrix.T @ delta)
    region = _plain_update_oracle(scores, lam)
    keep = [j for j in region if j in active]
    new = [j for j in region if j not in active]
    n = max(cfg.max_active - len(keep), 1)
    # brute force: best n new atoms by score, ties by index
    ranked = sorted(new, key=lambda j: (-scores[j], j))[:n]
    assert list(got) == sorted(keep + ranked)
