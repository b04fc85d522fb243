"""Independent ground truth for small instances.

Nothing in here calls the dual or primal solvers: the segment search, the
multi-start polytope search and the transportation simplex are separate
code paths meant to cross-check them.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from .divergences import h_prime
from .errors import InfeasibleMarginals, TooLarge, UnboundedOrInfeasible
from .measures import Coupling, Problem, as_matrix, density, ipf, marginal_error, objective
from .solver_dual import SolveResult

__all__ = [
    "brute_force_segment",
    "brute_force_polytope",
    "circulation_basis",
    "decompose_circulation",
    "northwest_corner",
    "transport_simplex",
    "linearized_lp",
    "LP_TOL",
]

LP_TOL = 1e-8
MAX_CELLS = 25


def _golden_min(f, a, b, tol=1e-12):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _segment_coupling(q, mu1, nu1):
    return np.array([[q, mu1 - q], [nu1 - q, 1.0 - mu1 - nu1 + q]])


def brute_force_segment(prob: Problem, grid_step: float = 1e-5) -> SolveResult:
    """Grid search over the 2x2 coupling segment parameterised by q = Q_11.

    The feasible range is [max(0, mu_1 + nu_1 - 1), min(mu_1, nu_1)]; the
    best grid point is refined by golden-section search to 1e-12.
    """
    if prob.shape != (2, 2):
        raise ValueError("brute_force_segment handles 2x2 problems only")
    mu1 = float(prob.mu.weights[0])
    nu1 = float(prob.nu.weights[0])
    lo = max(0.0, mu1 + nu1 - 1.0)
    hi = min(mu1, nu1)
    if lo > hi + 1e-15:
        raise InfeasibleMarginals("empty coupling polytope")

    def f(q):
        return objective(np.maximum(_segment_coupling(q, mu1, nu1), 0.0), prob)

    if hi - lo <= 1e-15:
        q = lo
    else:
        grid = np.arange(lo, hi, grid_step)
        grid = np.append(grid, hi)
        P = prob.reference
        Qs = np.stack(
            [grid, mu1 - grid, nu1 - grid, 1.0 - mu1 - nu1 + grid], axis=1
        ).clip(min=0.0)
        p = P.ravel()
        pos = p > 0
        vals = np.where(
            np.any((Qs > 0) & ~pos[None, :], axis=1),
            np.inf,
            (prob.divergence.value(Qs[:, pos] / p[pos]) * p[pos]).sum(axis=1),
        )
        k = int(np.argmin(vals))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, grid.size - 1)]
        q = _golden_min(f, a, b)
        if f(grid[k]) < f(q):
            q = float(grid[k])
    Q = np.maximum(_segment_coupling(q, mu1, nu1), 0.0)
    return SolveResult(
        coupling=Coupling(Q),
        objective=objective(Q, prob),
        marginal_error=marginal_error(Q, prob),
        iterations=0,
        converged=True,
        method="oracle-segment",
        info={"q": q, "grid_step": grid_step},
    )


def circulation_basis(m: int, n: int) -> np.ndarray:
    """Elementary 2-cycles e_00 + e_ij - e_0j - e_i0, flattened, as columns."""
    B = np.zeros((m * n, (m - 1) * (n - 1)))
    k = 0
    for i in range(1, m):
        for j in range(1, n):
            C = np.zeros((m, n))
            C[0, 0] = C[i, j] = 1.0
            C[0, j] = C[i, 0] = -1.0
            B[:, k] = C.ravel()
            k += 1
    return B


def decompose_circulation(Z) -> tuple:
    """Coefficients of a marginal-neutral matrix in the elementary 2-cycle basis.

    Returns ``(coefficients, reconstruction_error)``.
    """
    Z = np.asarray(Z, dtype=float)
    m, n = Z.shape
    B = circulation_basis(m, n)
    t, *_ = np.linalg.lstsq(B, Z.ravel(), rcond=None)
    return t, float(np.abs(B @ t - Z.ravel()).max(initial=0.0))


def northwest_corner(mu, nu):
    """Basic feasible solution by the northwest-corner rule.

    Works with floats or Fractions.  Returns ``(plan, basis)`` with exactly
    m + n - 1 basic cells (degenerate zeros included).
    """
    m, n = len(mu), len(nu)
    zero = mu[0] * 0
    a = list(mu)
    b = list(nu)
    x = [[zero] * n for _ in range(m)]
    basis = []
    i = j = 0
    while i < m and j < n:
        t = min(a[i], b[j])
        x[i][j] = t
        basis.append((i, j))
        a[i] -= t
        b[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if a[i] <= b[j] and i < m - 1:
            i += 1
        else:
            j += 1
    return x, basis


def _tree_path(basis, m, n, start_row, end_col):
    """Cells of the unique basis-tree path from row ``start_row`` to column ``end_col``."""
    adj = {}
    for (i, j) in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    start, goal = ("r", start_row), ("c", end_col)
    prev = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nxt, cell in adj.get(node, []):
            if nxt not in prev:
                prev[nxt] = (node, cell)
                stack.append(nxt)
    path = []
    node = goal
    while prev[node] is not None:
        node, cell = prev[node]
        path.append(cell)
    return path[::-1]


def transport_simplex(cost, mu, nu, allowed=None, big_m=None, max_pivots: int = 10000):
    """Exact transportation simplex with Bland's rule.

    ``cost``, ``mu``, ``nu`` may hold floats or :class:`fractions.Fraction`;
    with Fractions every pivot is exact.  Cells outside ``allowed`` get a
    big-M cost and must end up empty.  Returns ``(value, plan)``.
    """
    m, n = len(mu), len(nu)
    c = [[cost[i][j] for j in range(n)] for i in range(m)]
    exact = isinstance(mu[0], Fraction)
    if allowed is None:
        allowed = [[True] * n for _ in range(m)]
    if big_m is None:
        scale = sum(abs(c[i][j]) for i in range(m) for j in range(n) if allowed[i][j])
        big_m = (scale + 1) * 1000
    cc = [[c[i][j] if allowed[i][j] else big_m for j in range(n)] for i in range(m)]
    x, basis = northwest_corner(list(mu), list(nu))
    tol = 0 if exact else 1e-12 * (1 + big_m)
    for _ in range(max_pivots):
        # potentials u_i + v_j = c_ij on the basis tree
        u = [None] * m
        v = [None] * n
        u[0] = cc[0][0] * 0
        changed = True
        while changed:
            changed = False
            for (i, j) in basis:
                if u[i] is not None and v[j] is None:
                    v[j] = cc[i][j] - u[i]
                    changed = True
                elif v[j] is not None and u[i] is None:
                    u[i] = cc[i][j] - v[j]
                    changed = True
        bset = set(basis)
        entering = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in bset and cc[i][j] - u[i] - v[j] < -tol:
                    entering = (i, j)
                    break
            if entering:
                break
        if entering is None:
            break
        i0, j0 = entering
        # path in the tree from column j0 back to row i0 closes the cycle
        path = _tree_path(basis, m, n, i0, j0)
        # cells alternate: entering (+), then along path from column j0 side
        path = path[::-1]
        minus = path[0::2]
        plus = path[1::2]
        theta = min(x[i][j] for (i, j) in minus)
        leaving = min((cell for cell in minus if x[cell[0]][cell[1]] == theta), key=lambda t: t[0] * n + t[1])
        for (i, j) in minus:
            x[i][j] -= theta
        for (i, j) in plus:
            x[i][j] += theta
        x[i0][j0] += theta
        basis.remove(leaving)
        basis.append(entering)
    else:
        raise UnboundedOrInfeasible("transportation simplex did not terminate")
    for i in range(m):
        for j in range(n):
            if not allowed[i][j] and x[i][j] > tol:
                raise UnboundedOrInfeasible("marginals cannot be matched on the allowed cells")
    value = sum(c[i][j] * x[i][j] for i in range(m) for j in range(n) if allowed[i][j])
    return value, x


def linearized_lp(prob: Problem, Q_star) -> tuple:
    """Solve the linear transport problem with cost h'(dQ*/dP) on supp(P).

    Returns ``(lp_value, consistent)`` where ``consistent`` means Q* itself
    attains the LP value up to ``LP_TOL``.
    """
    q = as_matrix(Q_star)
    P = prob.reference
    d = density(q, P).values
    allowed = P > 0
    c = np.zeros_like(q)
    c[allowed] = np.asarray(h_prime(prob.divergence, d[allowed]))
    if not np.all(np.isfinite(c[allowed])):
        raise UnboundedOrInfeasible("h'(dQ*/dP) is infinite on supp(P)")
    value, _ = transport_simplex(
        c.tolist(), prob.mu.weights.tolist(), prob.nu.weights.tolist(), allowed.tolist()
    )
    own = float(np.sum(c[allowed] * q[allowed]))
    return float(value), abs(float(value) - own) <= LP_TOL


def _vertex_starts(prob, limit, rng):
    m, n = prob.shape
    mu = prob.mu.weights.tolist()
    nu = prob.nu.weights.tolist()
    allowed = prob.reference > 0
    seen = set()
    starts = []
    perms = list(itertools.product(itertools.permutations(range(m)), itertools.permutations(range(n))))
    if len(perms) > limit:
        idx = rng.choice(len(perms), size=limit, replace=False)
        perms = [perms[k] for k in sorted(idx)]
    for pr, pc in perms:
        x, _ = northwest_corner([mu[i] for i in pr], [nu[j] for j in pc])
        Q = np.zeros((m, n))
        for a, i in enumerate(pr):
            for b, j in enumerate(pc):
                Q[i, j] = x[a][b]
        if np.any((Q > 0) & ~allowed):
            continue
        key = tuple(np.round(Q, 15).ravel())
        if key not in seen:
            seen.add(key)
            starts.append(Q)
    return starts


def brute_force_polytope(
    prob: Problem, restarts: int = 20, seed: int = 0, max_vertex_starts: int = 64, n_checks: int = 10
) -> SolveResult:
    """Multi-start local search over the whole transportation polytope.

    The polytope is parameterised as Q = Q0 + B t with B a basis of the
    circulations supported in supp(P) (the elementary 2-cycles when P has
    full support).  Each start (``restarts`` random interior couplings plus
    northwest-corner vertices) is locally optimised by SLSQP under Q >= 0.
    Ties go to the lexicographically smallest coupling.
    """
    m, n = prob.shape
    if m * n > MAX_CELLS:
        raise TooLarge(f"{m}x{n} exceeds the {MAX_CELLS}-cell cap")
    rng = np.random.default_rng(seed)
    P = prob.reference
    allowed = (P > 0).ravel()
    spec = prob.divergence

    if allowed.all():
        B = circulation_basis(m, n)
    else:
        A = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
        B = np.zeros((m * n, 0))
        ns = null_space(A[:, allowed])
        if ns.size:
            B = np.zeros((m * n, ns.shape[1]))
            B[allowed] = ns

    p = P.ravel()
    pos = p > 0

    def fun_grad(Q0):
        def f(t):
            q = np.maximum(Q0 + B @ t, 0.0)
            return float(np.sum(spec.value(q[pos] / p[pos]) * p[pos]))

        def g(t):
            q = np.maximum(Q0 + B @ t, 0.0)
            grad = np.zeros_like(q)
            grad[pos] = spec.prime(np.maximum(q[pos] / p[pos], 1e-300))
            return B.T @ grad

        return f, g

    starts = [ipf(rng.random((m, n)) * (P > 0), prob.mu.weights, prob.nu.weights) for _ in range(restarts)]
    starts += _vertex_starts(prob, max_vertex_starts, rng)

    candidates = []
    for Q0 in starts:
        q0 = Q0.ravel()
        if B.shape[1] == 0:
            candidates.append(Q0)
            continue
        f, g = fun_grad(q0)
        cons = {"type": "ineq", "fun": lambda t, q0=q0: (q0 + B @ t)[allowed], "jac": lambda t: B[allowed]}
        res = minimize(
            f, np.zeros(B.shape[1]), jac=g, constraints=[cons], method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 1000},
        )
        Q = np.maximum(q0 + B @ res.x, 0.0).reshape(m, n)
        # SLSQP may overshoot Q >= 0 slightly; clipping then breaks the marginals
        if marginal_error(Q, prob) > 1e-15:
            Q = ipf(Q, prob.mu.weights, prob.nu.weights)
        candidates.append(Q)

    vals = [objective(Q, prob) for Q in candidates]
    order = sorted(range(len(candidates)), key=lambda k: (vals[k], tuple(candidates[k].ravel())))
    best = candidates[order[0]]

    checks = []
    for _ in range(n_checks):
        Z = rng.standard_normal((m, n))
        Z = Z - Z.mean(axis=1, keepdims=True) - Z.mean(axis=0, keepdims=True) + Z.mean()
        checks.append(decompose_circulation(Z)[1])

    err = marginal_error(best, prob)
    return SolveResult(
        coupling=Coupling(best, atol=max(1e-12, 10 * err)),
        objective=vals[order[0]],
        marginal_error=err,
        iterations=len(starts),
        converged=True,
        method="oracle-polytope",
        info={
            "seed": seed,
            "restarts": restarts,
            "starts": len(starts),
            "circulation_reconstruction_error": max(checks, default=0.0),
            "label": "restart-based reference, not a global certificate",
        },
    )
