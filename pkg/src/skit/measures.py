"""Finite measures, couplings and problem instances.

Everything here is a thin, immutable wrapper around numpy arrays.  The
arrays are flagged read-only so instances can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .divergences import DivergenceSpec
from .errors import (
    IncompatibleMarginals,
    InvalidInput,
    NegativeWeight,
    NotAbsolutelyContinuous,
    NotNormalized,
    ShapeMismatch,
    ZeroTotalMass,
)

__all__ = [
    "PROB_ATOL",
    "SUPPORT_THRESHOLD",
    "DiscreteMeasure",
    "Coupling",
    "Problem",
    "DensityMatrix",
    "make_measure",
    "make_problem",
    "as_matrix",
    "marginals",
    "marginal_error",
    "density",
    "objective",
    "independent_coupling",
    "ipf",
]

PROB_ATOL = 1e-12
SUPPORT_THRESHOLD = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiscreteMeasure:
    weights: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInput("measure weights must be a nonempty vector")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise NegativeWeight(f"negative or NaN weight in {w}")
        if not np.all(np.isfinite(w)):
            raise InvalidInput("weights must be finite")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def is_probability(self) -> bool:
        return abs(self.total - 1.0) <= PROB_ATOL

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


def make_measure(weights, normalize: bool = False, label: Optional[str] = None) -> DiscreteMeasure:
    """Validated probability measure from raw weights.

    With ``normalize`` the weights are scaled by 1/sum; otherwise they must
    already sum to 1 within ``PROB_ATOL``.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise InvalidInput("weights must be nonempty")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise NegativeWeight(f"negative weight in {w.tolist()}")
    if normalize:
        s = w.sum()
        if s <= 0:
            raise ZeroTotalMass("cannot normalize an all-zero weight vector")
        w = w / s
    elif abs(w.sum() - 1.0) > PROB_ATOL:
        raise NotNormalized(f"weights sum to {float(w.sum())!r}, expected 1")
    return DiscreteMeasure(w, label)


@dataclass(frozen=True)
class Coupling:
    """Nonnegative m x n matrix of total mass one."""

    mass: np.ndarray
    atol: float = PROB_ATOL

    def __post_init__(self):
        q = _frozen(self.mass)
        if q.ndim != 2:
            raise ShapeMismatch("coupling must be a matrix")
        if np.any(np.isnan(q)) or np.any(q < 0):
            raise NegativeWeight("coupling has negative entries")
        if abs(q.sum() - 1.0) > self.atol:
            raise NotNormalized(f"coupling has total mass {float(q.sum())!r}")
        object.__setattr__(self, "mass", q)

    @property
    def shape(self):
        return self.mass.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mass, dtype=dtype)


CouplingLike = Union[Coupling, np.ndarray]


def as_matrix(Q) -> np.ndarray:
    if isinstance(Q, Coupling):
        return Q.mass
    return np.asarray(Q, dtype=float)


@dataclass(frozen=True)
class Problem:
    """Two-marginal instance: minimise sum_ij h(Q_ij / P_ij) P_ij over cpl(mu, nu).

    ``compatible`` is checked at construction (mu charges only rows that P
    charges, same for nu and columns).  ``equivalent`` records whether
    ``P_ij > 0  <=>  mu_i nu_j > 0``, the hypothesis the shape checks need.
    """

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    reference: np.ndarray
    divergence: DivergenceSpec
    equivalent: bool = field(init=False)

    def __post_init__(self):
        P = _frozen(self.reference)
        m, n = len(self.mu), len(self.nu)
        if P.shape != (m, n):
            raise ShapeMismatch(f"reference has shape {P.shape}, expected {(m, n)}")
        if np.any(np.isnan(P)) or np.any(P < 0):
            raise NegativeWeight("reference measure has negative entries")
        if abs(P.sum() - 1.0) > PROB_ATOL:
            raise NotNormalized(f"reference has total mass {float(P.sum())!r}")
        for meas, name in ((self.mu, "mu"), (self.nu, "nu")):
            if not meas.is_probability:
                raise NotNormalized(f"{name} sums to {meas.total!r}")
        bad_rows = (self.mu.weights > 0) & (P.sum(axis=1) <= 0)
        bad_cols = (self.nu.weights > 0) & (P.sum(axis=0) <= 0)
        if bad_rows.any() or bad_cols.any():
            raise IncompatibleMarginals(
                f"mu/nu charge rows {np.flatnonzero(bad_rows).tolist()} / "
                f"columns {np.flatnonzero(bad_cols).tolist()} where P has no mass"
            )
        prod_pos = np.outer(self.mu.weights > 0, self.nu.weights > 0)
        object.__setattr__(self, "reference", P)
        object.__setattr__(self, "equivalent", bool(np.array_equal(P > 0, prod_pos)))

    @property
    def shape(self):
        return self.reference.shape


def make_problem(mu, nu, reference, divergence: DivergenceSpec) -> Problem:
    if not isinstance(mu, DiscreteMeasure):
        mu = make_measure(mu)
    if not isinstance(nu, DiscreteMeasure):
        nu = make_measure(nu)
    return Problem(mu, nu, np.asarray(reference, dtype=float), divergence)


def marginals(Q) -> tuple[np.ndarray, np.ndarray]:
    """Row sums and column sums of a coupling."""
    q = as_matrix(Q)
    return q.sum(axis=1), q.sum(axis=0)


def marginal_error(Q, prob: Problem) -> float:
    """Largest absolute deviation of the row/column sums from (mu, nu)."""
    r, c = marginals(Q)
    return float(max(np.abs(r - prob.mu.weights).max(), np.abs(c - prob.nu.weights).max()))


def independent_coupling(mu, nu) -> np.ndarray:
    return np.outer(np.asarray(mu, dtype=float), np.asarray(nu, dtype=float))


@dataclass(frozen=True)
class DensityMatrix:
    values: np.ndarray
    support_mask: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        mask = np.array(self.support_mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support_mask", mask)


def density(Q, P, support_threshold: float = SUPPORT_THRESHOLD) -> DensityMatrix:
    """Radon-Nikodym density d = Q/P cellwise.

    Cells with ``P == 0`` must carry no Q-mass; they get value 0 and are
    excluded from the support mask.
    """
    q = as_matrix(Q)
    p = np.asarray(P, dtype=float)
    if q.shape != p.shape:
        raise ShapeMismatch(f"coupling {q.shape} and reference {p.shape} differ in shape")
    null = p <= 0
    if np.any(q[null] > 0):
        raise NotAbsolutelyContinuous("coupling charges a cell where the reference is zero")
    vals = np.zeros_like(q)
    np.divide(q, p, out=vals, where=~null)
    return DensityMatrix(vals, vals > support_threshold)


def objective(Q, prob: Problem) -> float:
    """sum_{P_ij > 0} h(Q_ij / P_ij) P_ij, or +inf when Q is not << P."""
    q = as_matrix(Q)
    P = prob.reference
    pos = P > 0
    if np.any(q[~pos] > 0):
        return float("inf")
    d = q[pos] / P[pos]
    return float(np.sum(prob.divergence.value(d) * P[pos]))


def ipf(K, mu, nu, max_iter: int = 10000, tol: float = 1e-15) -> np.ndarray:
    """Iterative proportional fitting of a nonnegative matrix to marginals (mu, nu).

    Ends on a column scaling, so column sums are exact up to rounding.
    """
    Q = np.array(K, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    for _ in range(max_iter):
        r = Q.sum(axis=1)
        Q *= np.divide(mu, r, out=np.zeros_like(mu), where=r > 0)[:, None]
        c = Q.sum(axis=0)
        Q *= np.divide(nu, c, out=np.zeros_like(nu), where=c > 0)[None, :]
        if np.abs(Q.sum(axis=1) - mu).max() <= tol:
            break
    return Q
