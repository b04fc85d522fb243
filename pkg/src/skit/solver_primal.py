"""Primal methods that also work for non-convex h.

The workhorse is the circulation ``Q_eps = Q + eps (theta' - theta)`` where
``theta`` puts unit mass on the forward points ``(x_i, y_i)`` of a cycle and
``theta'`` on the backward points ``(x_{i+1}, y_i)``.  Both have the same
marginals, so ``Q_eps`` stays in cpl(mu, nu).  The first-order change of
the objective along this direction is the *cycle defect*

    sum_i h'(d(x_{i+1}, y_i)) - sum_i h'(d(x_i, y_i)),

and a negative defect means the coupling can be strictly improved.
:func:`cycle_descent` repeats "find a negative cycle, line-search along it"
until every cycle up to a given length has nonnegative defect.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import brentq

from .divergences import h_prime, h_second
from .errors import CycleOffSupport, NoImprovement
from .measures import (
    SUPPORT_THRESHOLD,
    Coupling,
    Problem,
    as_matrix,
    density,
    ipf,
    marginal_error,
    objective,
)
from .solver_dual import SolveResult

__all__ = [
    "Cycle",
    "PrimalOptions",
    "PGOptions",
    "cost_matrix",
    "iter_cycle_defects",
    "cycle_count",
    "cycle_defect",
    "find_violating_cycle",
    "improve_along_cycle",
    "cycle_descent",
    "project_transport",
    "projected_gradient",
    "random_coupling",
]

log = logging.getLogger(__name__)

TOL_DEFECT = 1e-9
LEVEL = 1e6


@dataclass(frozen=True)
class Cycle:
    """Alternating cycle; forward points (rows[i], cols[i]), backward (rows[i+1], cols[i])."""

    rows: tuple
    cols: tuple

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        cols = tuple(int(c) for c in self.cols)
        if len(rows) != len(cols) or len(rows) < 2:
            raise ValueError("a cycle needs N >= 2 rows and as many columns")
        if len(set(zip(rows, cols))) != len(rows):
            raise ValueError("cycle points must be distinct")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_points(cls, points) -> "Cycle":
        rows, cols = zip(*points)
        return cls(rows, cols)

    def __len__(self):
        return len(self.rows)

    @property
    def forward(self):
        return list(zip(self.rows, self.cols))

    @property
    def backward(self):
        n = len(self.rows)
        return [(self.rows[(i + 1) % n], self.cols[i]) for i in range(n)]

    def direction(self, shape) -> np.ndarray:
        """theta' - theta as a dense matrix (unit weights)."""
        D = np.zeros(shape)
        for r, c in self.forward:
            D[r, c] -= 1.0
        for r, c in self.backward:
            D[r, c] += 1.0
        return D


def cost_matrix(Q, prob: Problem) -> np.ndarray:
    """h'(dQ/dP) on supp(P) (``-inf`` allowed where d = 0), ``+inf`` off supp(P)."""
    P = prob.reference
    d = density(Q, P).values
    c = np.full(P.shape, np.inf)
    pos = P > 0
    c[pos] = np.asarray(h_prime(prob.divergence, d[pos]))
    return c


def _row_sequences(m: int, N: int) -> np.ndarray:
    """Distinct-row sequences of length N up to rotation (first entry minimal)."""
    seqs = [
        (first,) + rest
        for first in range(m)
        for rest in itertools.permutations(range(first + 1, m), N - 1)
    ]
    return np.array(seqs, dtype=int).reshape(-1, N)


def _col_sequences(n: int, N: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n), N)), dtype=int).reshape(-1, N)


def cycle_count(m: int, n: int, N: int) -> int:
    """Number of length-N cycles with distinct rows and distinct columns."""
    if N > min(m, n):
        return 0
    return math.comb(m, N) * math.factorial(N - 1) * math.perm(n, N)


def _defects(cost, fwd_ok, R, C):
    """Defects for every (row sequence, column sequence) pair, plus admissibility."""
    N = R.shape[1]
    Rb = np.roll(R, -1, axis=1)
    fwd = cost[R[:, None, :], C[None, :, :]]
    bwd = cost[Rb[:, None, :], C[None, :, :]]
    ok = fwd_ok[R[:, None, :], C[None, :, :]].all(axis=2)
    with np.errstate(invalid="ignore"):
        fsum = fwd.sum(axis=2)
        # +inf (P-null backward point) dominates any -inf
        bsum = np.where(np.isposinf(bwd).any(axis=2), np.inf, bwd.sum(axis=2))
        defect = bsum - fsum
    return defect, ok, fwd, bwd


def iter_cycle_defects(
    cost: np.ndarray,
    fwd_ok: np.ndarray,
    max_len: int,
    budget: int = 10**6,
    rng: Optional[np.random.Generator] = None,
    chunk: int = 2**20,
) -> Iterator[tuple]:
    """Yield ``(length, rows, cols, defects, exhaustive, |c| on points)`` blocks.

    Cycles use distinct rows and distinct columns; a closed walk repeating a
    row or column splits into shorter such cycles whose defects add up, so
    nothing is lost.  For each length the cycles come in lexicographic order
    of (rows, cols) with rows[0] = min(rows).  Only cycles whose forward
    points all satisfy ``fwd_ok`` are yielded.  A length whose cycle count
    exceeds ``budget`` is sampled uniformly (``budget`` draws) instead.
    """
    m, n = cost.shape
    for N in range(2, max_len + 1):
        total = cycle_count(m, n, N)
        if total == 0:
            continue
        if total <= budget:
            R = _row_sequences(m, N)
            C = _col_sequences(n, N)
            step = max(1, chunk // max(1, C.shape[0] * N))
            for k in range(0, R.shape[0], step):
                Rk = R[k : k + step]
                defect, ok, fwd, bwd = _defects(cost, fwd_ok, Rk, C)
                ii, jj = np.nonzero(ok)
                mags = np.maximum(np.abs(fwd[ii, jj]).max(axis=1), np.abs(bwd[ii, jj]).max(axis=1))
                yield N, Rk[ii], C[jj], defect[ii, jj], True, mags
        else:
            rng = rng if rng is not None else np.random.default_rng(0)
            rows = np.array([rng.choice(m, N, replace=False) for _ in range(budget)])
            cols = np.array([rng.choice(n, N, replace=False) for _ in range(budget)])
            shift = rows.argmin(axis=1)
            idx = (np.arange(N)[None, :] + shift[:, None]) % N
            rows = np.take_along_axis(rows, idx, axis=1)
            cols = np.take_along_axis(cols, idx, axis=1)
            Rb = np.roll(rows, -1, axis=1)
            fwd = cost[rows, cols]
            bwd = cost[Rb, cols]
            ok = fwd_ok[rows, cols].all(axis=1)
            with np.errstate(invalid="ignore"):
                bsum = np.where(np.isposinf(bwd).any(axis=1), np.inf, bwd.sum(axis=1))
                defect = bsum - fwd.sum(axis=1)
            mags = np.maximum(np.abs(fwd).max(axis=1), np.abs(bwd).max(axis=1))
            yield N, rows[ok], cols[ok], defect[ok], False, mags[ok]


def cycle_defect(Q, prob: Problem, cyc: Cycle, support_threshold=SUPPORT_THRESHOLD) -> float:
    """Backward minus forward sum of h'(dQ/dP) along ``cyc``.

    ``+inf`` when a backward point lies outside supp(P).
    """
    q = as_matrix(Q)
    for r, c in cyc.forward:
        if q[r, c] <= support_threshold:
            raise CycleOffSupport(f"forward point {(r, c)} carries no Q-mass")
    cost = cost_matrix(q, prob)
    bwd = np.array([cost[p] for p in cyc.backward])
    fwd = np.array([cost[p] for p in cyc.forward])
    if np.isposinf(bwd).any():
        return math.inf
    return float(bwd.sum() - fwd.sum())


def find_violating_cycle(
    Q,
    prob: Problem,
    max_len: int = 3,
    budget: int = 10**6,
    tol_defect: float = TOL_DEFECT,
    level: float = LEVEL,
    rng: Optional[np.random.Generator] = None,
    exclude=(),
    stats: Optional[dict] = None,
    select: str = "first",
) -> Optional[Cycle]:
    """A cycle with defect < -tol_defect, or None.

    ``select="first"`` returns the first one by length, then
    lexicographically; ``select="steepest"`` returns the most negative
    defect over all lengths (ties broken the same way).  Forward points
    range over supp(Q), backward points over supp(P).  Cycles on which
    |h'(d)| exceeds ``level`` are skipped and counted in
    ``stats["skipped_level"]``.
    """
    if select not in ("first", "steepest"):
        raise ValueError(f"unknown select {select!r}")
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    q = as_matrix(Q)
    cost = cost_matrix(q, prob)
    fwd_ok = q > SUPPORT_THRESHOLD
    excluded = set(exclude)
    skipped = 0
    found, best = None, -tol_defect
    for N, rows, cols, defect, _, mags in iter_cycle_defects(cost, fwd_ok, max_len, budget, rng):
        bad = defect < -tol_defect
        over = bad & ~(mags <= level)
        skipped += int(over.sum())
        idx = np.flatnonzero(bad & ~over)
        if select == "steepest":
            # stable sort keeps lexicographic order among equal defects
            idx = idx[np.argsort(defect[idx], kind="stable")]
        for k in idx:
            if select == "steepest" and not defect[k] < best:
                break
            cyc = Cycle(tuple(rows[k]), tuple(cols[k]))
            if cyc not in excluded:
                found, best = cyc, defect[k]
                break
        if found is not None and select == "first":
            break
    if stats is not None:
        stats["skipped_level"] = stats.get("skipped_level", 0) + skipped
    return found


def _golden(f, a, b, tol):
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
    return (a, b)


def _convex_step(slope, curvature, eps_max):
    """Step with slope <= 0 closest to the root of the (nondecreasing) slope.

    Safeguarded Newton inside a shrinking bracket.  A point with slope <= 0
    is returned whenever one was seen, because convexity then certifies
    f(x) - f(0) <= x * slope(x) <= 0.
    """
    if slope(eps_max) <= 0:
        return eps_max
    lo, hi = 0.0, eps_max
    x = 0.5 * eps_max
    for _ in range(200):
        s = slope(x)
        if s <= 0:
            lo = x
        else:
            hi = x
        if s == 0:
            break
        curv = curvature(x)
        nxt = x - s / curv if curv > 0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if nxt == x or hi - lo <= 4 * np.spacing(hi):
            break
        x = nxt
    return lo if lo > 0 else x


def _slope_root(slope, lo, hi):
    """Brent root of the slope on a bracket with slope(lo) < 0 < slope(hi)."""
    return brentq(slope, lo, hi, xtol=np.finfo(float).tiny, rtol=4 * np.finfo(float).eps)


def _nonconvex_candidates(delta, slope, eps_max, grid):
    """Candidate steps: the grid/golden minimiser, its derivative root and the first basin."""
    ks = eps_max * np.arange(1, grid + 1) / grid
    vals = delta(ks)
    k = int(np.argmin(vals))
    a = ks[k - 1] if k > 0 else 0.0
    b = ks[k + 1] if k + 1 < grid else eps_max
    # coarse is enough: the derivative root below does the polishing
    a, b = _golden(delta, a, b, 1e-8 * eps_max)
    mid = 0.5 * (a + b)
    candidates = [ks[k], mid]
    lo, hi = mid, mid
    # widen to a sign change of the directional derivative, then bisect
    width = max(b - a, 1e-15 * eps_max)
    for _ in range(60):
        if slope(lo) < 0 or lo <= 0:
            break
        lo = max(0.0, lo - width)
        width *= 2
    width = max(b - a, 1e-15 * eps_max)
    for _ in range(60):
        if slope(hi) > 0 or hi >= eps_max:
            break
        hi = min(eps_max, hi + width)
        width *= 2
    if slope(lo) < 0 < slope(hi):
        candidates.append(_slope_root(slope, lo, hi))
    # the first local minimiser along the line; for tiny defects it sits far
    # below the grid spacing and only the derivative can locate it
    if slope(ks[0]) > 0:
        candidates.append(_slope_root(slope, 0.0, ks[0]))
    if slope(eps_max) <= 0:
        candidates.append(eps_max)
    return candidates


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


def improve_along_cycle(Q, prob: Problem, cyc: Cycle, grid: int = 32) -> tuple:
    """Line search along the circulation of ``cyc``; returns (Q_eps, delta_objective).

    The step ranges over (0, eps_max] with eps_max the smallest forward
    mass.  For convex h the objective is convex along the line and the step
    is the root of the directional derivative (safeguarded Newton).  For
    non-convex h a coarse grid locates the best basin, golden-section
    narrows it and a bisection on the directional derivative polishes the
    minimiser; the first basin next to eps = 0 is always a candidate.

    Only the 2N touched cells enter the objective difference.  When the
    step changes every touched density by less than 1 %, the difference is
    the Gauss-Legendre integral of the directional derivative instead,
    which stays accurate where h(d + e) - h(d) would cancel.  The move is
    accepted only if the difference is negative beyond its error estimate.
    """
    q = np.array(as_matrix(Q), dtype=float)
    defect = cycle_defect(q, prob, cyc)
    if not defect < 0:
        raise NoImprovement(f"cycle defect {defect} is not negative")
    P = prob.reference
    spec = prob.divergence
    fr, fc = np.array(cyc.rows), np.array(cyc.cols)
    br = np.roll(fr, -1)
    rows = np.concatenate([fr, br])
    cols = np.concatenate([fc, fc])
    sign = np.concatenate([-np.ones(len(fr)), np.ones(len(fr))])
    q0 = q[rows, cols]
    p0 = P[rows, cols]
    d0 = q0 / p0
    h0 = spec.value(d0)
    eps_max = float(q0[: len(fr)].min())

    def moved(eps):
        eps = np.asarray(eps, dtype=float)[..., None]
        return np.maximum(q0 + eps * sign, 0.0) / p0

    def delta(eps):
        out = (spec.value(moved(eps)) - h0) @ p0
        return out if np.ndim(eps) else float(out)

    def slopes(eps):
        return np.asarray(h_prime(spec, moved(eps))) @ sign

    def slope(eps):
        return float(slopes(eps))

    def curvature(eps):
        d = moved(eps)
        pos = d > 0
        return float(np.sum(np.asarray(h_second(spec, d[pos])) / p0[pos]))

    def change(eps):
        """(objective change, error bound) for a step eps."""
        d1 = moved(eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.max(np.abs(d1 - d0) / d0)
        if rel <= 1e-2:
            g16 = 0.5 * eps * float(_GL_WEIGHTS @ slopes(0.5 * eps * (_GL_NODES + 1)))
            g8 = 0.5 * eps * float(_GL8_WEIGHTS @ slopes(0.5 * eps * (_GL8_NODES + 1)))
            scale = eps * float(np.abs(np.asarray(h_prime(spec, d1))).sum())
            return g16, abs(g16 - g8) + 8 * np.finfo(float).eps * scale
        h1 = spec.value(d1)
        noise = 8 * np.finfo(float).eps * float(np.dot(np.abs(h1) + np.abs(h0), p0))
        return float(np.dot(h1 - h0, p0)), noise

    if spec.convex:
        candidates = [_convex_step(slope, curvature, eps_max)]
    else:
        candidates = _nonconvex_candidates(delta, slope, eps_max, grid)
    scored = [(change(e), e) for e in candidates if e > 0]
    if not scored:
        raise NoImprovement("no positive step along the cycle")
    (dval, err), best = min(scored, key=lambda t: t[0][0])
    if not dval < -err:
        raise NoImprovement(f"line search gained only {dval:.3e} (error bound {err:.1e})")
    new = q.copy()
    new[rows, cols] = np.maximum(q0 + best * sign, 0.0)
    return new, dval


@dataclass(frozen=True)
class PrimalOptions:
    max_len: int = 3
    budget: int = 10**6
    max_rounds: int = 100000
    tol_defect: float = TOL_DEFECT
    level: float = LEVEL
    seed: int = 0
    restarts: int = 0


def _descent_run(prob: Problem, Q, opts: PrimalOptions, rng, stats) -> tuple:
    """One descent from ``Q``; returns (Q, trace, converged, rounds, stalled)."""
    stalled = set()
    trace = []
    converged = False
    rnd = 0
    for rnd in range(1, opts.max_rounds + 1):
        cyc = find_violating_cycle(
            Q, prob, opts.max_len, opts.budget, opts.tol_defect, opts.level, rng, stalled, stats, "steepest"
        )
        if cyc is None:
            converged = True
            rnd -= 1
            break
        defect = cycle_defect(Q, prob, cyc)
        try:
            newQ, dval = improve_along_cycle(Q, prob, cyc)
        except NoImprovement:
            stalled.add(cyc)
            continue
        eps = float(np.abs(newQ - Q).max())
        Q = newQ
        # a stalled cycle becomes worth retrying once one of its cells moves
        touched = set(cyc.forward) | set(cyc.backward)
        stalled = {c for c in stalled if touched.isdisjoint(c.forward) and touched.isdisjoint(c.backward)}
        trace.append(
            {
                "iteration": rnd,
                "marginal_error": marginal_error(Q, prob),
                "objective": objective(Q, prob),
                "gap": math.nan,
                "round": rnd,
                "cycle_length": len(cyc),
                "defect": defect,
                "epsilon": eps,
                "change": dval,
            }
        )
    return Q, trace, converged, rnd, stalled


def cycle_descent(prob: Problem, init=None, opts: Optional[PrimalOptions] = None, **kw) -> SolveResult:
    """Improve ``init`` along negative-defect cycles until none is left.

    ``converged`` means no cycle of length <= max_len (within budget) has
    defect below ``-tol_defect``: a finite-support local optimality
    certificate, not a global one for non-convex h.  Each round moves along
    the most negative cycle.  With ``restarts > 0`` the descent is repeated
    from that many random feasible couplings and the best end point is kept
    (ties to the earliest run); the trace is that of the kept run.
    Potentials are attached when the final coupling satisfies the loop
    condition.
    """
    from .verify import check_loop_condition, recover_potentials

    opts = opts or PrimalOptions()
    if kw:
        opts = PrimalOptions(**{**opts.__dict__, **kw})
    if init is None:
        init = np.outer(prob.mu.weights, prob.nu.weights)
    Q0 = np.array(as_matrix(init), dtype=float)
    if not math.isfinite(objective(Q0, prob)):
        raise ValueError("init must be absolutely continuous w.r.t. the reference")
    rng = np.random.default_rng(opts.seed)
    starts = [Q0] + [random_coupling(prob, rng) for _ in range(opts.restarts)]
    stats = {"skipped_level": 0}
    best = None
    for k, start in enumerate(starts):
        run = _descent_run(prob, start, opts, rng, stats)
        val = objective(run[0], prob)
        if best is None or val < best[0]:
            best = (val, k, run)
    _, best_start, (Q, trace, converged, rnd, stalled) = best
    potentials = None
    loop_ok, _ = check_loop_condition(Q, prob, opts.max_len)
    if loop_ok:
        try:
            pot, _ = recover_potentials(Q, prob)
            potentials = pot
        except Exception:  # pragma: no cover - diagnostics only
            potentials = None
    err = marginal_error(Q, prob)
    gap = None
    if potentials is not None and prob.divergence.convex:
        from .solver_dual import duality_gap

        try:
            gap = duality_gap(prob, Q, potentials)
        except Exception:
            gap = None
    return SolveResult(
        coupling=Coupling(Q, atol=max(1e-12, 10 * err)),
        objective=objective(Q, prob),
        marginal_error=err,
        iterations=rnd,
        converged=converged,
        potentials=potentials,
        gap=gap,
        method="cycle",
        trace=trace,
        info={
            "seed": opts.seed,
            "max_len": opts.max_len,
            "restarts": opts.restarts,
            "best_start": best_start,
            "skipped_level": stats["skipped_level"],
            "stalled_cycles": len(stalled),
            "certificate": "finite-support local optimality up to max_len"
            + ("" if prob.divergence.convex else " (necessary-condition only)"),
        },
    )


# ---------------------------------------------------------------------------
# projected gradient baseline


def project_transport(Y, mu, nu, allowed=None, iters: int = 500) -> np.ndarray:
    """Euclidean projection onto {Q >= 0, Q = 0 off ``allowed``, marginals mu, nu}.

    Dykstra's alternating projections over the row-sum affine set, the
    column-sum affine set and the (masked) nonnegative orthant.
    """
    x = np.array(Y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    m, n = x.shape
    if allowed is None:
        allowed = np.ones_like(x, dtype=bool)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    r = np.zeros_like(x)
    for _ in range(iters):
        y = x + p
        y = y - ((y.sum(axis=1) - mu) / n)[:, None]
        p = x + p - y
        z = y + q
        z = z - ((z.sum(axis=0) - nu) / m)[None, :]
        q = y + q - z
        w = z + r
        x_new = np.where(allowed, np.maximum(w, 0.0), 0.0)
        r = w - x_new
        if np.abs(x_new - x).max() <= 1e-16:
            x = x_new
            break
        x = x_new
    return x


def random_coupling(prob: Problem, rng: np.random.Generator) -> np.ndarray:
    """Random feasible coupling supported in supp(P), by IPF from a random matrix."""
    K = rng.random(prob.shape) * (prob.reference > 0)
    return ipf(K, prob.mu.weights, prob.nu.weights)


@dataclass(frozen=True)
class PGOptions:
    step: float = 0.05
    max_iter: int = 5000
    restarts: int = 0
    seed: int = 0
    inner_iters: int = 500


def _pg_run(prob, Q0, opts):
    P = prob.reference
    allowed = P > 0
    spec = prob.divergence
    Q = Q0.copy()
    f = objective(Q, prob)
    step = opts.step
    its = 0
    for its in range(1, opts.max_iter + 1):
        d = np.where(allowed, Q / np.where(allowed, P, 1.0), 0.0)
        grad = np.where(allowed, np.asarray(h_prime(spec, np.maximum(d, 1e-12))), 0.0)
        accepted = False
        for _ in range(40):
            cand = project_transport(Q - step * grad, prob.mu.weights, prob.nu.weights, allowed, opts.inner_iters)
            fc = objective(cand, prob)
            if fc < f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        moved = np.abs(cand - Q).max()
        Q, f = cand, fc
        step = min(opts.step, step * 1.5)
        if moved <= 1e-15:
            break
    return Q, f, its


def projected_gradient(prob: Problem, init=None, opts: Optional[PGOptions] = None, **kw) -> SolveResult:
    """Projected gradient with backtracking, multi-started from random couplings.

    The gradient of the objective in Q is h'(Q/P) on supp(P).  Returns the
    best run; ``step == 0`` returns ``init`` untouched.
    """
    opts = opts or PGOptions()
    if kw:
        opts = PGOptions(**{**opts.__dict__, **kw})
    if init is None:
        init = np.outer(prob.mu.weights, prob.nu.weights)
    Q0 = np.array(as_matrix(init), dtype=float)
    rng = np.random.default_rng(opts.seed)
    if opts.step <= 0:
        best, fbest, its = Q0, objective(Q0, prob), 0
    else:
        starts = [Q0] + [random_coupling(prob, rng) for _ in range(opts.restarts)]
        runs = [_pg_run(prob, s, opts) for s in starts]
        best, fbest, its = min(runs, key=lambda r: r[1])
    err = marginal_error(best, prob)
    return SolveResult(
        coupling=Coupling(best, atol=max(1e-12, 10 * err)),
        objective=fbest,
        marginal_error=err,
        iterations=its,
        converged=opts.step > 0,
        method="pg",
        info={"seed": opts.seed, "restarts": opts.restarts},
    )
