"""Certificates for candidate optimizers.

* :func:`check_cyclical_monotonicity` - no cycle may have negative defect;
* :func:`check_loop_condition` - loops inside supp(Q) have zero defect;
* :func:`recover_potentials` - least-squares potentials with
  ``h'(d_ij) = phi_i + psi_j`` on supp(Q);
* :func:`check_shape` - the additive (``h'(0) = -inf``) or clamped
  (``h'(0)`` finite) shape of ``h'(dQ/dP)``.

For convex h these conditions are also sufficient (see
:func:`skit.solver_dual.duality_gap`); for non-convex h every report is
tagged as a necessary condition only.
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .csvio import format_number
from .divergences import Regime
from .errors import EmptySupport, RegimeMismatch
from .measures import SUPPORT_THRESHOLD, Problem, as_matrix, density
from .solver_dual import Potentials
from .solver_primal import Cycle, cost_matrix, iter_cycle_defects

__all__ = [
    "MonotonicityReport",
    "ShapeReport",
    "check_cyclical_monotonicity",
    "check_loop_condition",
    "recover_potentials",
    "potentials_along_tree",
    "support_components",
    "check_shape",
    "report_to_text",
    "report_to_csv",
]

TOL = 1e-8


def _qualifier(prob: Optional[Problem]) -> str:
    if prob is None:
        return "linear cost"
    return "necessary and sufficient" if prob.divergence.convex else "necessary-condition"


def _fmt(v):
    # tuples (cycles) become "(0 1) (1 0)" so they survive inside a CSV cell
    if isinstance(v, (list, tuple)):
        inner = " ".join(_fmt(x) for x in v)
        return f"({inner})" if v and not isinstance(v[0], (list, tuple)) else inner
    return format_number(v)


def report_to_text(report) -> str:
    """``key = value`` lines, one per field."""
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in asdict(report).items())


def report_to_csv(report, header: bool = True) -> str:
    d = asdict(report)
    buf = io.StringIO()
    if header:
        buf.write(",".join(d) + "\n")
    buf.write(",".join(_fmt(v) for v in d.values()) + "\n")
    return buf.getvalue()


@dataclass(frozen=True)
class MonotonicityReport:
    mode: str
    worst_defect: float
    violations: int
    cycles_tested: int
    exhaustive: bool
    max_len: int
    tol: float
    worst_cycle: Optional[tuple]
    qualifier: str

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_cyclical_monotonicity(
    Q,
    prob: Optional[Problem] = None,
    max_len: int = 3,
    budget: int = 10**6,
    cost=None,
    tol: float = TOL,
    seed: int = 0,
) -> MonotonicityReport:
    """Collect every cycle whose defect falls below ``-tol``.

    With ``cost`` given (linear mode) the defect uses that fixed cost
    instead of h'(dQ/dP) and ``prob`` may be omitted; this is the classical
    c-cyclical monotonicity test for a transport plan.
    """
    q = as_matrix(Q)
    if cost is None:
        if prob is None:
            raise ValueError("need a problem or an explicit cost matrix")
        c = cost_matrix(q, prob)
        mode = "nonlinear"
    else:
        c = np.asarray(cost, dtype=float)
        mode = "linear"
    fwd_ok = q > SUPPORT_THRESHOLD
    rng = np.random.default_rng(seed)
    worst = math.inf
    worst_cycle = None
    violations = 0
    tested = 0
    exhaustive = True
    for N, rows, cols, defect, exh, _ in iter_cycle_defects(c, fwd_ok, max_len, budget, rng):
        exhaustive &= exh
        tested += defect.size
        violations += int(np.count_nonzero(defect < -tol))
        if defect.size:
            k = int(np.argmin(defect))
            if defect[k] < worst:
                worst = float(defect[k])
                worst_cycle = (tuple(int(r) for r in rows[k]), tuple(int(x) for x in cols[k]))
    return MonotonicityReport(
        mode=mode,
        worst_defect=worst if tested else 0.0,
        violations=violations,
        cycles_tested=tested,
        exhaustive=exhaustive,
        max_len=max_len,
        tol=tol,
        worst_cycle=worst_cycle,
        qualifier=_qualifier(prob if cost is None else None),
    )


def check_loop_condition(Q, prob: Optional[Problem] = None, max_len: int = 3, tol: float = TOL, cost=None):
    """All loops with forward and backward points in supp(Q) have zero defect.

    Returns ``(ok, worst |defect|)``.  Loops may use repeated rows/columns
    in principle; those split into distinct-index loops, so enumerating the
    latter is complete.
    """
    q = as_matrix(Q)
    if cost is None:
        supp = density(q, prob.reference).support_mask
        c = cost_matrix(q, prob)
    else:
        supp = q > SUPPORT_THRESHOLD
        c = np.asarray(cost, dtype=float)
    c = np.where(supp, c, np.inf)
    worst = 0.0
    for _, _, _, defect, _, _ in iter_cycle_defects(c, supp, max_len):
        finite = np.isfinite(defect)
        if finite.any():
            worst = max(worst, float(np.abs(defect[finite]).max()))
    return worst <= tol, worst


def support_components(mask: np.ndarray):
    """Connected components of the bipartite graph rows <-> columns on ``mask``.

    Returns ``(n_components, labels)`` where labels index rows first, then
    columns; isolated nodes get their own label.
    """
    m, n = mask.shape
    ii, jj = np.nonzero(mask)
    graph = coo_matrix((np.ones(ii.size), (ii, m + jj)), shape=(m + n, m + n))
    return connected_components(graph, directed=False)


def _align_components(phi, psi, labels, m, P, supp, floor):
    """Shift components against each other so that phi_i + psi_j <= floor off supp(Q).

    Each component k moves by s_k (phi + s_k, psi - s_k).  Constraints
    s_a - s_b <= floor - phi_i - psi_j form a difference system solved by
    Bellman-Ford; an infeasible system leaves the shifts at zero.
    """
    rows_lab, cols_lab = labels[:m], labels[m:]
    cells = np.argwhere((P > 0) & ~supp)
    edges = {}
    for i, j in cells:
        a, b = rows_lab[i], cols_lab[j]
        if a == b or not (np.isfinite(phi[i]) and np.isfinite(psi[j])):
            continue
        w = floor - phi[i] - psi[j]
        edges[(b, a)] = min(edges.get((b, a), np.inf), w)
    if not edges:
        return phi, psi
    k = labels.max() + 1
    dist = np.zeros(k)
    for _ in range(k + 1):
        changed = False
        for (b, a), w in edges.items():
            if dist[b] + w < dist[a] - 1e-15:
                dist[a] = dist[b] + w
                changed = True
        if not changed:
            break
    else:
        return phi, psi
    dist -= dist[rows_lab[0]]
    return phi + dist[rows_lab], psi - dist[cols_lab]


def recover_potentials(Q, prob: Problem, support_threshold: float = SUPPORT_THRESHOLD):
    """Least-squares potentials on supp(Q); returns ``(Potentials, residual)``.

    Per connected component of the support graph the first row is anchored
    at phi = 0, the path sums of :func:`potentials_along_tree` give a start
    and ``phi_i + psi_j = h'(d_ij)`` over the support edges is solved in
    the least-squares sense.  Under exact loop equality the path sums are
    already the solution.  When h'(0) is finite, components are then
    shifted against each other so that ``phi_i + psi_j <= h'(0)`` off the
    support wherever that is possible.
    Rows/columns outside every support edge get ``-inf``.
    """
    q = as_matrix(Q)
    dens = density(q, prob.reference, support_threshold)
    supp = dens.support_mask
    if not supp.any():
        raise EmptySupport("coupling has empty support")
    m, n = q.shape
    c = np.zeros_like(q)
    c[supp] = prob.divergence.prime(dens.values[supp])
    ncomp, labels = support_components(supp)
    tree = potentials_along_tree(q, prob, support_threshold)
    phi = np.full(m, -np.inf)
    psi = np.full(n, -np.inf)
    ii, jj = np.nonzero(supp)
    for k in range(ncomp):
        nodes = np.flatnonzero(labels == k)
        rows = nodes[nodes < m]
        cols = nodes[nodes >= m] - m
        if rows.size == 0 or cols.size == 0:
            continue
        e = np.isin(ii, rows) & np.isin(jj, cols)
        ei, ej = ii[e], jj[e]
        ridx = {r: t for t, r in enumerate(rows)}
        cidx = {s: rows.size + t for t, s in enumerate(cols)}
        A = np.zeros((ei.size, rows.size + cols.size))
        A[np.arange(ei.size), [ridx[r] for r in ei]] = 1.0
        A[np.arange(ei.size), [cidx[s] for s in ej]] = 1.0
        # start from the path sums, then correct in the least-squares sense;
        # consistent data leaves a zero right-hand side and an exact answer
        x0 = np.concatenate([tree.phi[rows], tree.psi[cols]])
        r = c[ei, ej] - A @ x0
        # anchor: the first row keeps phi = 0
        corr = np.linalg.lstsq(A[:, 1:], r, rcond=None)[0]
        sol = x0 + np.concatenate([[0.0], corr])
        phi[rows] = sol[: rows.size]
        psi[cols] = sol[rows.size :]
    if prob.divergence.regime is not Regime.PRIME_ZERO_NEG_INF:
        phi, psi = _align_components(phi, psi, labels, m, prob.reference, supp, prob.divergence.prime_at_zero)
    resid = np.abs(phi[ii] + psi[jj] - c[ii, jj])
    return Potentials(phi, psi), float(resid.max())


def potentials_along_tree(Q, prob: Problem, support_threshold: float = SUPPORT_THRESHOLD) -> Potentials:
    """Path-sum potentials along a BFS spanning tree of each support component.

    Starting from phi = 0 at the anchor row, walking a support edge (i, j)
    sets psi_j = h'(d_ij) - phi_i or phi_i = h'(d_ij) - psi_j.
    """
    q = as_matrix(Q)
    dens = density(q, prob.reference, support_threshold)
    supp = dens.support_mask
    m, n = q.shape
    c = np.zeros_like(q)
    c[supp] = prob.divergence.prime(dens.values[supp])
    ii, jj = np.nonzero(supp)
    graph = coo_matrix((np.ones(ii.size), (ii, m + jj)), shape=(m + n, m + n)).tocsr()
    graph = graph + graph.T
    val = np.full(m + n, -np.inf)
    seen = np.zeros(m + n, dtype=bool)
    for start in range(m):
        if seen[start] or not supp[start].any():
            continue
        order, pred = breadth_first_order(graph, start, directed=False, return_predecessors=True)
        val[start] = 0.0
        seen[order] = True
        for node in order[1:]:
            p = pred[node]
            if node >= m:
                val[node] = c[p, node - m] - val[p]
            else:
                val[node] = c[node, p - m] - val[p]
    return Potentials(val[:m], val[m:])


@dataclass(frozen=True)
class ShapeReport:
    regime: str
    shape_form: str
    support_residual: float
    off_support_violation: float
    equivalence_ok: bool
    problem_equivalent: bool
    passed: bool
    tol: float
    qualifier: str


def check_shape(
    Q,
    prob: Problem,
    pot: Potentials,
    tol: float = TOL,
    regime: Optional[Regime] = None,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> ShapeReport:
    """Test ``h'(dQ/dP) = phi + psi`` (additive) or ``max(phi + psi, h'(0))`` (clamped).

    The additive form additionally requires supp(Q) = supp(P).  Cells where
    P vanishes are exempt.  The check only passes when the problem has
    P ~ mu x nu.
    """
    spec = prob.divergence
    if regime is not None and Regime(regime) is not spec.regime:
        raise RegimeMismatch(f"problem divergence has regime {spec.regime.value}, not {Regime(regime).value}")
    q = as_matrix(Q)
    dens = density(q, prob.reference, support_threshold)
    supp = dens.support_mask
    P = prob.reference
    t = pot.table()
    if np.any(supp & ~np.isfinite(t)):
        raise ValueError("potentials must be finite on every support row and column")
    hp = np.zeros_like(q)
    hp[supp] = spec.prime(dens.values[supp])
    additive = spec.regime is Regime.PRIME_ZERO_NEG_INF
    if additive:
        target = t
        equivalence_ok = bool(np.array_equal(supp, P > 0))
        off = 0.0
    else:
        target = np.maximum(t, spec.prime_at_zero)
        equivalence_ok = True
        off_cells = (P > 0) & ~supp
        with np.errstate(invalid="ignore"):
            viol = t[off_cells] - spec.prime_at_zero
        off = float(np.maximum(viol[np.isfinite(viol)], 0.0).max(initial=0.0))
    resid = float(np.abs(hp[supp] - target[supp]).max(initial=0.0))
    passed = resid <= tol and off <= tol and equivalence_ok and prob.equivalent
    return ShapeReport(
        regime=spec.regime.value,
        shape_form="additive" if additive else "clamped",
        support_residual=resid,
        off_support_violation=off,
        equivalence_ok=equivalence_ok,
        problem_equivalent=prob.equivalent,
        passed=bool(passed),
        tol=tol,
        qualifier=_qualifier(prob),
    )
