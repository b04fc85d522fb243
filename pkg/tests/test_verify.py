import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skit import (
    EmptySupport,
    Potentials,
    RegimeMismatch,
    Regime,
    check_cyclical_monotonicity,
    check_loop_condition,
    check_shape,
    cycle_descent,
    duality_gap,
    entropy,
    make_problem,
    quadratic,
    random_problem,
    recover_potentials,
    sinkhorn_generalized,
)
from skit.verify import potentials_along_tree, report_to_csv, report_to_text, support_components

from _oracles import assignment_costs, entropy_root
from conftest import P22, Q_QUAD


def _entropy_opt():
    q = entropy_root()
    return np.array([[q, 0.6 - q], [0.5 - q, q - 0.1]])


# --- cyclical monotonicity -------------------------------------------------


def test_monotonicity_entropy_optimizer(entropy22):
    rep = check_cyclical_monotonicity(_entropy_opt(), entropy22, max_len=2, tol=1e-6)
    assert rep.passed and rep.cycles_tested == 2 and rep.exhaustive
    assert abs(rep.worst_defect) <= 1e-6


def test_monotonicity_constant_density():
    prob = make_problem([0.5, 0.5], [0.5, 0.5], P22, entropy())
    rep = check_cyclical_monotonicity(P22, prob, max_len=2)
    assert rep.violations == 0 and rep.worst_defect == 0.0


def test_monotonicity_linear_mode():
    x = np.array([0.0, 1.0])
    c = np.abs(x[:, None] - x[None, :])
    indep = np.full((2, 2), 0.25)
    diag = np.diag([0.5, 0.5])
    bad = check_cyclical_monotonicity(indep, cost=c, max_len=2)
    good = check_cyclical_monotonicity(diag, cost=c, max_len=2)
    assert bad.mode == "linear" and bad.violations >= 1 and bad.worst_defect == -2.0
    assert good.passed
    # exhaustive assignments: the identity is the unique cheapest one
    costs = assignment_costs(c)
    assert min(costs, key=costs.get) == (0, 1)


def test_monotonicity_nonconvex_qualifier(nonconvex22):
    r = cycle_descent(nonconvex22)
    rep = check_cyclical_monotonicity(r.coupling, nonconvex22, max_len=2)
    assert rep.qualifier == "necessary-condition"


def test_monotonicity_needs_cost_or_problem():
    with pytest.raises(ValueError):
        check_cyclical_monotonicity(P22)


# --- loop condition --------------------------------------------------------


def test_loop_quadratic(quadratic22):
    ok, worst = check_loop_condition(Q_QUAD, quadratic22, max_len=2)
    assert ok
    # 2.25 + 1.75 = 3 + 1
    assert worst == pytest.approx(0.0, abs=1e-12)


def test_loop_entropy(entropy22):
    ok, worst = check_loop_condition(_entropy_opt(), entropy22, max_len=2, tol=1e-6)
    assert ok and worst <= 1e-6


def test_loop_non_decomposable_table():
    ok, worst = check_loop_condition(np.full((2, 2), 0.25), cost=np.array([[0.0, 1.0], [0.0, 0.0]]), max_len=2)
    assert not ok and worst == 1.0


# --- potentials ------------------------------------------------------------


def test_recover_constant_density():
    prob = make_problem([0.5, 0.5], [0.5, 0.5], P22, entropy())
    pot, res = recover_potentials(P22, prob)
    np.testing.assert_array_equal(pot.gauge_fixed().phi, [0.0, 0.0])
    np.testing.assert_array_equal(pot.gauge_fixed().psi, [1.0, 1.0])
    assert res == 0.0


def test_recover_quadratic(quadratic22):
    pot, res = recover_potentials(Q_QUAD, quadratic22)
    np.testing.assert_allclose(pot.phi, [0.0, -1.25], atol=1e-12)
    np.testing.assert_allclose(pot.psi, [2.25, 3.0], atol=1e-12)
    assert res <= 1e-12


def test_recover_loop_violation(entropy22):
    # h' = 1 + log d on d = [[1.125, 1.5], [0.5, 0.875]]: loop defect ~ -0.272
    _, res = recover_potentials(Q_QUAD, entropy22)
    assert res >= 0.05
    assert res == pytest.approx(abs(math.log(1.125 * 0.875 / 0.75)) / 4, rel=1e-9)


def test_recover_empty_support(entropy22):
    with pytest.raises(EmptySupport):
        recover_potentials(np.zeros((2, 2)), entropy22)


def test_tree_potentials_agree_with_least_squares():
    prob = random_problem(4, 5, family="quadratic", seed=2)
    r = sinkhorn_generalized(prob)
    a, _ = recover_potentials(r.coupling, prob)
    b = potentials_along_tree(r.coupling, prob)
    ga, gb = a.gauge_fixed(), b.gauge_fixed()
    np.testing.assert_allclose(ga.table(), gb.table(), atol=1e-8)


def test_support_components_block_diagonal():
    mask = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 0]], dtype=bool)
    k, labels = support_components(mask)
    # {r0, c0}, {r1, c1, c2}, {r2}
    assert k == 3
    assert labels[0] == labels[3] and labels[1] == labels[4] == labels[5]
    assert len({labels[0], labels[1], labels[2]}) == 3


# --- shape -----------------------------------------------------------------


def test_shape_quadratic(quadratic22):
    pot, _ = recover_potentials(Q_QUAD, quadratic22)
    rep = check_shape(Q_QUAD, quadratic22, pot)
    assert rep.passed and rep.shape_form == "clamped"
    assert rep.support_residual <= 1e-12 and rep.off_support_violation == 0.0


def test_shape_entropy_gauge(entropy22):
    r = sinkhorn_generalized(entropy22)
    base = check_shape(r.coupling, entropy22, r.potentials)
    shifted = check_shape(r.coupling, entropy22, r.potentials.shifted(3.7))
    assert base.passed and shifted.passed and base.shape_form == "additive"
    assert shifted.support_residual == pytest.approx(base.support_residual, abs=1e-14)


def test_shape_regime_mismatch(entropy22):
    r = sinkhorn_generalized(entropy22)
    with pytest.raises(RegimeMismatch):
        check_shape(r.coupling, entropy22, r.potentials, regime=Regime.PRIME_ZERO_ZERO)


def test_shape_entropy_requires_equivalence(entropy22):
    Q = np.array([[0.5, 0.1], [0.0, 0.4]])
    pot = Potentials([0.0, 0.0], [0.0, 0.0])
    rep = check_shape(Q, entropy22, pot)
    assert not rep.equivalence_ok and not rep.passed


def test_shape_sparse_quadratic():
    P = np.full((2, 2), 0.25)
    prob = make_problem([0.9, 0.1], [0.9, 0.1], P, quadratic())
    r = sinkhorn_generalized(prob)
    Q = r.coupling.mass
    # objective on the segment q11 in [0.8, 0.9]: 4 (q^2 + 2 (0.9 - q)^2 + (q - 0.8)^2)
    # has its stationary point at 0.65, outside the segment, so the minimiser is
    # the endpoint q11 = 0.8 where d22 = 0 and the (.)+ branch is active
    qs = np.linspace(0.8, 0.9, 100001)
    f = 4 * (qs**2 + 2 * (0.9 - qs) ** 2 + (qs - 0.8) ** 2)
    q = qs[np.argmin(f)]
    assert q == 0.8
    np.testing.assert_allclose(Q, [[q, 0.9 - q], [0.9 - q, q - 0.8]], atol=1e-8)
    pot, _ = recover_potentials(Q, prob)
    rep = check_shape(Q, prob, pot)
    assert rep.passed and rep.off_support_violation <= rep.tol


def test_reports_serialise(quadratic22):
    pot, _ = recover_potentials(Q_QUAD, quadratic22)
    rep = check_shape(Q_QUAD, quadratic22, pot)
    text = report_to_text(rep)
    assert "passed = true" in text and "shape_form = clamped" in text
    header, row = report_to_csv(rep).splitlines()
    assert header.split(",")[0] == "regime" and len(row.split(",")) == len(header.split(","))


# --- certificate chain -----------------------------------------------------


@settings(max_examples=15)
@given(seed=st.integers(0, 10**6), size=st.integers(3, 6), family=st.sampled_from(["entropy", "quadratic"]))
def test_necessity_chain(seed, size, family):
    prob = random_problem(size, size, family=family, seed=seed)
    r = sinkhorn_generalized(prob)
    assert r.gap <= 1e-8
    mono = check_cyclical_monotonicity(r.coupling, prob, max_len=3)
    assert mono.passed and mono.exhaustive
    ok, _ = check_loop_condition(r.coupling, prob, max_len=3)
    assert ok
    pot, res = recover_potentials(r.coupling, prob)
    assert res <= 1e-6
    assert check_shape(r.coupling, prob, pot).passed


@settings(max_examples=15)
@given(seed=st.integers(0, 10**6), family=st.sampled_from(["entropy", "quadratic"]))
def test_sufficiency(seed, family):
    prob = random_problem(4, 4, family=family, seed=seed)
    r = sinkhorn_generalized(prob, tol_marginal=1e-13)
    pot, res = recover_potentials(r.coupling, prob)
    rep = check_shape(r.coupling, prob, pot, tol=1e-10)
    if rep.passed:
        assert duality_gap(prob, r.coupling, pot) <= 1e-6


@given(seed=st.integers(0, 10**6), s=st.floats(-10, 10))
def test_gauge_per_component(seed, s):
    # two disjoint blocks in P give two gauge classes
    rng = np.random.default_rng(seed)
    P = np.zeros((4, 4))
    P[:2, :2] = rng.uniform(0.1, 1, (2, 2))
    P[2:, 2:] = rng.uniform(0.1, 1, (2, 2))
    P /= P.sum()
    prob = make_problem(P.sum(1), P.sum(0), P, quadratic())
    pot, _ = recover_potentials(P, prob)
    base = check_shape(P, prob, pot)
    phi, psi = pot.phi.copy(), pot.psi.copy()
    phi[:2] += s
    psi[:2] -= s
    moved = check_shape(P, prob, Potentials(phi, psi))
    assert moved.support_residual == pytest.approx(base.support_residual, abs=1e-12)
