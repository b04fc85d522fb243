from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skit import (
    TooLarge,
    UnboundedOrInfeasible,
    brute_force_polytope,
    brute_force_segment,
    entropy,
    h_value,
    linearized_lp,
    make_problem,
    random_problem,
    sinkhorn_generalized,
    transport_simplex,
)
from skit.oracle import circulation_basis, decompose_circulation, northwest_corner

from _oracles import entropy_root, lp_by_vertices, segment_grid, to_fraction_matrix
from conftest import MU22, NU22, P22, Q_QUAD

FAMILIES = [
    ("entropy", None),
    ("quadratic", None),
    ("power", {"p": 3.0}),
    ("congestion", {"a": 2.0}),
    ("nonconvex_test", {"a": 2.0}),
]


# --- segment ---------------------------------------------------------------


def test_segment_entropy(entropy22):
    r = brute_force_segment(entropy22)
    assert r.info["q"] == pytest.approx(entropy_root(), abs=1e-9)


def test_segment_quadratic(quadratic22):
    r = brute_force_segment(quadratic22)
    # stationarity 50 q = 22.5
    assert r.info["q"] == pytest.approx(0.45, abs=1e-9)


def test_segment_matches_independent_grid(nonconvex22):
    r = brute_force_segment(nonconvex22)
    mu1, nu1 = MU22[0], NU22[0]

    def f(q):
        Q = np.array([[q, mu1 - q], [nu1 - q, 1 - mu1 - nu1 + q]]).clip(min=0.0)
        return float(np.sum(h_value(nonconvex22.divergence, Q / P22) * P22))

    _, best = segment_grid(f, 0.1, 0.5, step=1e-5)
    assert r.objective <= best + 1e-12


def test_segment_degenerate():
    P = np.array([[0.7, 0.1], [0.1, 0.1]])
    prob = make_problem([1.0, 0.0], [1.0, 0.0], P, entropy())
    r = brute_force_segment(prob)
    np.testing.assert_array_equal(r.coupling.mass, [[1.0, 0.0], [0.0, 0.0]])


def test_segment_rejects_other_shapes():
    with pytest.raises(ValueError):
        brute_force_segment(random_problem(3, 2))


# --- polytope --------------------------------------------------------------


@pytest.mark.parametrize("family,params", FAMILIES, ids=[f for f, _ in FAMILIES])
def test_polytope_agrees_with_segment(family, params):
    worst = 0.0
    for seed in range(100):
        prob = random_problem(2, 2, family=family, params=params, seed=seed)
        a = brute_force_segment(prob)
        b = brute_force_polytope(prob, seed=seed)
        worst = max(worst, abs(a.objective - b.objective))
    assert worst <= 1e-8


def test_polytope_independent_reference():
    rng = np.random.default_rng(11)
    mu = rng.dirichlet(np.ones(3))
    nu = rng.dirichlet(np.ones(3))
    P = np.outer(mu, nu)
    r = brute_force_polytope(make_problem(mu, nu, P, entropy()), seed=11)
    assert r.objective == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(r.coupling.mass, P, atol=1e-6)


def test_polytope_matches_dual_on_convex():
    prob = random_problem(3, 4, family="quadratic", seed=5)
    r = brute_force_polytope(prob, seed=5)
    assert r.objective == pytest.approx(sinkhorn_generalized(prob).objective, abs=1e-8)


def test_polytope_records_provenance():
    r = brute_force_polytope(random_problem(2, 3, seed=1), restarts=4, seed=9)
    assert r.info["seed"] == 9 and r.info["restarts"] == 4
    assert "not a global certificate" in r.info["label"]
    assert r.info["circulation_reconstruction_error"] <= 1e-12


def test_polytope_is_seed_deterministic():
    prob = random_problem(3, 3, family="nonconvex_test", params={"a": 2.0}, seed=4)
    a = brute_force_polytope(prob, seed=2)
    b = brute_force_polytope(prob, seed=2)
    np.testing.assert_array_equal(a.coupling.mass, b.coupling.mass)


def test_polytope_sparse_reference():
    P = np.array([[0.3, 0.0, 0.1], [0.1, 0.2, 0.0], [0.0, 0.1, 0.2]])
    prob = make_problem(P.sum(1), P.sum(0), P, entropy())
    r = brute_force_polytope(prob)
    assert np.all(r.coupling.mass[P == 0] == 0)
    assert r.objective == pytest.approx(0.0, abs=1e-9)


def test_polytope_too_large():
    with pytest.raises(TooLarge):
        brute_force_polytope(random_problem(5, 6))


# --- circulations ----------------------------------------------------------


def test_circulation_basis_shape():
    B = circulation_basis(3, 4)
    assert B.shape == (12, 6)
    assert np.linalg.matrix_rank(B) == 6
    for k in range(6):
        C = B[:, k].reshape(3, 4)
        assert not C.sum(axis=0).any() and not C.sum(axis=1).any()


@given(seed=st.integers(0, 10**6), m=st.integers(2, 5), n=st.integers(2, 5))
def test_circulation_completeness(seed, m, n):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((m, n))
    Z = Z - Z.mean(axis=1, keepdims=True) - Z.mean(axis=0, keepdims=True) + Z.mean()
    _, err = decompose_circulation(Z)
    assert err <= 1e-12


# --- transportation LP -----------------------------------------------------


def test_northwest_corner():
    x, basis = northwest_corner([0.5, 0.5], [0.25, 0.75])
    assert x == [[0.25, 0.25], [0.0, 0.5]]
    assert len(basis) == 3


def test_transport_simplex_fraction_example():
    c = [[Fraction(0), Fraction(1)], [Fraction(1), Fraction(0)]]
    mu = [Fraction(3, 4), Fraction(1, 4)]
    nu = [Fraction(1, 4), Fraction(3, 4)]
    value, plan = transport_simplex(c, mu, nu)
    assert value == Fraction(1, 2)
    assert plan[0][0] + plan[0][1] == Fraction(3, 4)


@pytest.mark.parametrize("size", [2, 3])
@pytest.mark.parametrize("seed", range(10))
def test_transport_simplex_exact_vs_vertices(size, seed):
    rng = np.random.default_rng(seed)
    scale = 24
    mu = [Fraction(int(k), scale) for k in rng.multinomial(scale - size, np.ones(size) / size) + 1]
    nu = [Fraction(int(k), scale) for k in rng.multinomial(scale - size, np.ones(size) / size) + 1]
    cost = to_fraction_matrix(rng.integers(0, 10, (size, size)) / 4, 4)
    value, plan = transport_simplex(cost, mu, nu)
    assert value == lp_by_vertices(cost, mu, nu)
    assert [sum(row) for row in plan] == mu


def test_transport_simplex_forbidden_cells():
    c = [[0.0, 1.0], [1.0, 0.0]]
    with pytest.raises(UnboundedOrInfeasible):
        transport_simplex(c, [0.5, 0.5], [0.5, 0.5], allowed=[[True, False], [False, False]])


def test_linearized_lp_quadratic(quadratic22):
    lp, ok = linearized_lp(quadratic22, Q_QUAD)
    # 2.25 * 0.45 + 3 * 0.15 + 1 * 0.05 + 1.75 * 0.35 = 2.125, attained at both
    # segment vertices since the 2-cycle has zero reduced cost
    assert lp == pytest.approx(2.125, abs=1e-12) and ok


def test_linearized_lp_constant_density():
    prob = make_problem([0.5, 0.5], [0.5, 0.5], P22, entropy())
    lp, ok = linearized_lp(prob, P22)
    assert ok and lp == pytest.approx(1.0, abs=1e-12)


def test_linearized_lp_detects_non_optimal(entropy22):
    _, ok = linearized_lp(entropy22, Q_QUAD)
    assert not ok


def test_linearized_lp_at_solver_output():
    for family in ("entropy", "quadratic"):
        prob = random_problem(4, 4, family=family, seed=8)
        r = sinkhorn_generalized(prob)
        assert linearized_lp(prob, r.coupling)[1]
