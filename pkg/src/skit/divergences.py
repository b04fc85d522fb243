"""Divergence integrands ``h`` for the functional ``Q -> sum h(dQ/dP) dP``.

A :class:`DivergenceSpec` bundles ``h``, its derivative, the limit of the
derivative at zero and, for convex ``h``, the inverse derivative and the
convex conjugate ``h*(y) = sup_{x >= 0} (x y - h(x))``.  All evaluation
functions are vectorised over numpy arrays and return Python floats for
scalar input.

The value of ``h'(0)`` decides which shape an optimizer takes:

* ``h'(0) = -inf`` (entropy-like): the density is positive wherever the
  reference is, and ``h'(dQ/dP) = phi(x) + psi(y)``;
* ``h'(0)`` finite (``x**2``-like): optimal supports may be sparse and
  ``h'(dQ/dP) = max(phi(x) + psi(y), h'(0))``.

Built-in families: :func:`entropy`, :func:`quadratic`, :func:`power`,
:func:`congestion` and :func:`nonconvex_test`.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import special

from .errors import DomainError, InconsistentSpec, InvalidInput, NotInvertible

__all__ = [
    "Regime",
    "DivergenceSpec",
    "RegimeReport",
    "entropy",
    "quadratic",
    "power",
    "congestion",
    "nonconvex_test",
    "make_divergence",
    "h_value",
    "h_prime",
    "h_second",
    "h_prime_inverse",
    "h_conjugate",
    "classify",
    "certify_second_lower_bound",
    "check_growth",
    "FAMILIES",
]

INVERSE_TOL = 1e-13
INVERSE_MAX_ITER = 200


class Regime(str, enum.Enum):
    PRIME_ZERO_NEG_INF = "PRIME_ZERO_NEG_INF"
    PRIME_ZERO_ZERO = "PRIME_ZERO_ZERO"
    PRIME_ZERO_FINITE = "PRIME_ZERO_FINITE"


@dataclass(frozen=True)
class DivergenceSpec:
    """An integrand ``h`` on ``[0, inf)`` together with its calculus.

    ``value``, ``prime`` and ``second`` receive float arrays; ``prime`` and
    ``second`` are only ever called on strictly positive entries.
    ``prime_inverse`` (optional closed form) receives arguments already
    clamped to lie strictly above ``prime_at_zero``.
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    prime: Callable[[np.ndarray], np.ndarray]
    prime_at_zero: float
    convex: bool
    params: Mapping[str, float] = field(default_factory=dict)
    second: Optional[Callable[[np.ndarray], np.ndarray]] = None
    second_lower_bound: Optional[float] = None
    prime_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    conjugate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    growth_factor: Optional[float] = None
    # congestion family only: marginal cost f and its derivative f'
    marginal_cost: Optional[Callable[[np.ndarray], np.ndarray]] = None
    marginal_cost_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def regime(self) -> Regime:
        if self.prime_at_zero == -math.inf:
            return Regime.PRIME_ZERO_NEG_INF
        if self.prime_at_zero == 0.0:
            return Regime.PRIME_ZERO_ZERO
        return Regime.PRIME_ZERO_FINITE

    def describe(self) -> str:
        if not self.params:
            return self.name
        args = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"


def _scalar_or_array(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def _as_nonneg(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("h is only defined on [0, inf)")
    return arr


def h_value(spec: DivergenceSpec, x):
    """h(x), using the continuous extension at 0."""
    arr = _as_nonneg(x)
    return _scalar_or_array(x, spec.value(arr))


def h_prime(spec: DivergenceSpec, x):
    """h'(x); at ``x == 0`` the limit ``h'(0)``, possibly ``-inf``."""
    arr = _as_nonneg(x)
    pos = arr > 0
    out = np.full(arr.shape, spec.prime_at_zero, dtype=float)
    if np.any(pos):
        out[pos] = spec.prime(arr[pos])
    return _scalar_or_array(x, out)


def h_second(spec: DivergenceSpec, x):
    """h''(x) for x > 0; central differences when the family has no closed form."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("h'' is evaluated on (0, inf) only")
    if spec.second is not None:
        out = spec.second(arr)
    else:
        eps = 1e-6 * arr
        out = (spec.prime(arr + eps) - spec.prime(arr - eps)) / (2 * eps)
    return _scalar_or_array(x, out)


def _bisect_inverse(prime, t, second=None):
    """Solve prime(x) = t for x > 0 elementwise, prime increasing.

    Bracket grows by doubling (upwards) or halving (downwards) from 1, then
    bisection; with ``second`` available, Newton steps that stay inside the
    bracket replace the midpoint.
    """
    t = np.asarray(t, dtype=float)
    lo = np.ones_like(t)
    hi = np.ones_like(t)
    for _ in range(1100):
        need = prime(hi) < t
        if not need.any():
            break
        hi = np.where(need, 2.0 * hi, hi)
    for _ in range(1100):
        need = prime(lo) > t
        if not need.any():
            break
        lo = np.where(need, 0.5 * lo, lo)
    lo = np.where(prime(hi) < t, hi, np.where(lo < hi, lo, 0.5 * hi))
    x = 0.5 * (lo + hi)
    for _ in range(INVERSE_MAX_ITER):
        r = prime(x) - t
        done = (np.abs(r) <= INVERSE_TOL) | (hi - lo <= 4 * np.spacing(hi))
        if done.all():
            break
        lo = np.where(r < 0, x, lo)
        hi = np.where(r > 0, x, hi)
        mid = 0.5 * (lo + hi)
        if second is not None:
            with np.errstate(all="ignore"):
                step = x - r / second(x)
            mid = np.where(np.isfinite(step) & (step > lo) & (step < hi), step, mid)
        x = np.where(done, x, mid)
    return x


def h_prime_inverse(spec: DivergenceSpec, t):
    """Inverse of h' on the regime-adjusted range.

    Arguments at or below ``h'(0)`` map to 0, so for ``h'(0) = 0`` this is
    ``(h')^{-1}(t_+)``.
    """
    if not spec.convex:
        raise NotInvertible(f"{spec.describe()} is not convex; h' has no inverse")
    tt = np.asarray(t, dtype=float)
    out = np.zeros(tt.shape, dtype=float)
    inner = tt > spec.prime_at_zero
    if np.any(inner):
        args = tt[inner]
        if spec.prime_inverse is not None:
            vals = spec.prime_inverse(args)
        else:
            vals = _bisect_inverse(spec.prime, args, spec.second)
        out[inner] = vals
    return _scalar_or_array(t, out)


def h_conjugate(spec: DivergenceSpec, y):
    """h*(y) = x y - h(x) at x = (h')^{-1}(y), regime-adjusted; -h(0) at y = -inf."""
    if not spec.convex:
        raise NotInvertible(f"{spec.describe()} is not convex; no conjugate is exposed")
    yy = np.asarray(y, dtype=float)
    if spec.conjugate is not None:
        out = np.asarray(spec.conjugate(yy), dtype=float)
    else:
        x = np.asarray(h_prime_inverse(spec, yy), dtype=float)
        h0 = float(spec.value(np.zeros(1))[0])
        with np.errstate(invalid="ignore"):
            out = np.where(x > 0, x * yy - spec.value(x), -h0)
    return _scalar_or_array(y, out)


# ---------------------------------------------------------------------------
# built-in families


def _xlogx(x):
    return special.xlogy(x, x)


def entropy() -> DivergenceSpec:
    """h(x) = x log x."""
    return DivergenceSpec(
        name="entropy",
        value=_xlogx,
        prime=lambda x: 1.0 + np.log(x),
        second=lambda x: 1.0 / x,
        prime_at_zero=-math.inf,
        convex=True,
        second_lower_bound=0.0,
        prime_inverse=lambda t: np.exp(t - 1.0),
        conjugate=lambda y: np.exp(y - 1.0),
        growth_factor=2.0,
    )


def quadratic() -> DivergenceSpec:
    """h(x) = x**2."""
    return DivergenceSpec(
        name="quadratic",
        value=lambda x: x * x,
        prime=lambda x: 2.0 * x,
        second=lambda x: np.full_like(x, 2.0),
        prime_at_zero=0.0,
        convex=True,
        second_lower_bound=2.0,
        prime_inverse=lambda t: 0.5 * t,
        growth_factor=4.0,
    )


def power(p: float) -> DivergenceSpec:
    """h(x) = x**p for p > 1."""
    p = float(p)
    if not p > 1.0:
        raise InvalidInput(f"power divergence needs p > 1, got {p}")
    return DivergenceSpec(
        name="power",
        params={"p": p},
        value=lambda x: np.power(x, p),
        prime=lambda x: p * np.power(x, p - 1.0),
        second=lambda x: p * (p - 1.0) * np.power(x, p - 2.0),
        prime_at_zero=0.0,
        convex=True,
        second_lower_bound=0.0,
        prime_inverse=lambda t: np.power(t / p, 1.0 / (p - 1.0)),
        growth_factor=2.0**p,
    )


def congestion(a: float, kind: str = "linear", q: float = 1.0) -> DivergenceSpec:
    """Entropy plus a congestion penalty: h(x) = x log x + F(x), F' = f.

    ``kind="linear"``: f(x) = a x, so F(x) = a x**2 / 2.
    ``kind="power"``:  f(x) = a x**q (q > 0), so F(x) = a x**(q+1) / (q+1).

    With ``a >= 0`` the marginal cost f is nondecreasing, hence
    h'' = 1/x + f' > 0 and h is convex.  For ``kind="linear"`` the
    inverse derivative is closed form through the Wright omega function.
    """
    a = float(a)
    if a < 0:
        raise InvalidInput("congestion strength a must be >= 0")
    if kind == "linear":
        q = 1.0
        f = lambda x: a * x  # noqa: E731
        fp = lambda x: np.full_like(x, a)  # noqa: E731
        F = lambda x: 0.5 * a * x * x  # noqa: E731

        def inverse(t):
            # 1 + log x + a x = t  <=>  a x = omega(log a + t - 1)
            if a == 0.0:
                return np.exp(t - 1.0)
            return np.real(special.wrightomega(math.log(a) + t - 1.0)) / a

    elif kind == "power":
        q = float(q)
        if not q > 0:
            raise InvalidInput("congestion power exponent q must be > 0")
        f = lambda x: a * np.power(x, q)  # noqa: E731
        fp = lambda x: a * q * np.power(x, q - 1.0)  # noqa: E731
        F = lambda x: a * np.power(x, q + 1.0) / (q + 1.0)  # noqa: E731
        inverse = None
    else:
        raise InvalidInput(f"unknown congestion kind {kind!r}")

    return DivergenceSpec(
        name="congestion",
        params={"a": a, "kind": kind, "q": q},
        value=lambda x: _xlogx(x) + F(x),
        prime=lambda x: 1.0 + np.log(x) + f(x),
        second=lambda x: 1.0 / x + fp(x),
        prime_at_zero=-math.inf,
        convex=True,
        second_lower_bound=0.0,
        prime_inverse=inverse,
        growth_factor=2.0 ** (q + 1.0) if a > 0 else 2.0,
        marginal_cost=f,
        marginal_cost_prime=fp,
    )


def nonconvex_test(a: float = 2.0) -> DivergenceSpec:
    """h(x) = x log x + a (1 - cos x), non-convex for a > 1/pi.

    h'(x) = 1 + log x + a sin x and h'' = 1/x + a cos x >= -a, so every
    hypothesis of the entropy-regime shape result holds while h''(pi) < 0.
    """
    a = float(a)
    if not a > 1.0 / math.pi:
        raise InvalidInput("nonconvex_test needs a > 1/pi")
    return DivergenceSpec(
        name="nonconvex_test",
        params={"a": a},
        value=lambda x: _xlogx(x) + a * (1.0 - np.cos(x)),
        prime=lambda x: 1.0 + np.log(x) + a * np.sin(x),
        second=lambda x: 1.0 / x + a * np.cos(x),
        prime_at_zero=-math.inf,
        convex=False,
        second_lower_bound=-a,
    )


FAMILIES = {
    "entropy": entropy,
    "quadratic": quadratic,
    "power": power,
    "congestion": congestion,
    "nonconvex_test": nonconvex_test,
}


def make_divergence(name: str, params: Optional[Mapping] = None) -> DivergenceSpec:
    """Build a catalog divergence from its config name and parameters."""
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise InvalidInput(
            f"unknown divergence {name!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    try:
        return factory(**dict(params or {}))
    except TypeError as exc:
        raise InvalidInput(f"bad parameters for {name}: {exc}") from None


# ---------------------------------------------------------------------------
# classification and numerical certificates


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    convex: bool
    shape_form: str  # "additive" or "clamped"
    qualifier: str
    prime_monotone_on_grid: bool
    prime_unbounded: bool


def classify(spec: DivergenceSpec, x_big: float = 1e8, y_big: float = 10.0) -> RegimeReport:
    """Regime, convexity and applicable shape form of ``spec``.

    Probes h' on a log-spaced grid over [1e-8, 1e8]; a decrease contradicts a
    declared convex flag and raises :class:`InconsistentSpec`.
    """
    grid = np.logspace(-8, 8, 4001)
    hp = spec.prime(grid)
    slack = 1e-12 * np.maximum(1.0, np.abs(hp[:-1]))
    monotone = bool(np.all(np.diff(hp) >= -slack))
    if spec.convex and not monotone:
        raise InconsistentSpec(f"{spec.describe()} is declared convex but h' decreases on the grid")
    if not spec.convex and monotone:
        warnings.warn(
            f"{spec.describe()} is declared non-convex but h' is monotone on the probe grid",
            stacklevel=2,
        )
    unbounded = bool(spec.prime(np.array([x_big]))[0] > y_big)
    if not unbounded:
        raise InconsistentSpec(f"h'({x_big:g}) <= {y_big:g}: h' does not appear to diverge")

    regime = spec.regime
    near = float(spec.prime(np.array([1e-12]))[0])
    if regime is Regime.PRIME_ZERO_NEG_INF:
        if not near < float(spec.prime(np.array([1e-6]))[0]):
            raise InconsistentSpec("declared h'(0) = -inf but h' does not decrease towards 0")
    elif abs(near - spec.prime_at_zero) > 1e-4 * (1.0 + abs(spec.prime_at_zero)):
        raise InconsistentSpec(f"declared h'(0) = {spec.prime_at_zero} but h'(1e-12) = {near}")

    shape_form = "additive" if regime is Regime.PRIME_ZERO_NEG_INF else "clamped"
    qualifier = "necessary and sufficient" if spec.convex else "necessary-condition"
    return RegimeReport(regime, spec.convex, shape_form, qualifier, monotone, unbounded)


def certify_second_lower_bound(spec: DivergenceSpec, lo=1e-3, hi=1e3, num=2001):
    """Minimum centred second difference of h over a log grid.

    Returns ``(minimum, certified)``; certified means the minimum is at
    least ``second_lower_bound - 1e-6``.
    """
    x = np.logspace(np.log10(lo), np.log10(hi), num)
    eps = 1e-4 * x
    d2 = (spec.value(x + eps) - 2.0 * spec.value(x) + spec.value(x - eps)) / eps**2
    m = float(d2.min())
    bound = spec.second_lower_bound
    return m, bound is not None and m >= bound - 1e-6


def check_growth(spec: DivergenceSpec, hi=1e4, num=4001):
    """Numerically fit constants for h(2x) <= a h(x) + b x + c on [0, hi].

    ``a`` is the family's ``growth_factor``; ``b`` and ``c`` are fitted on
    ``[0, hi/100]`` and then checked on the whole of ``[0, hi]``, so a too
    small ``a`` shows up as a failure.  Returns ``(ok, (a, b, c))``;
    user-supplied specs without a growth factor return ``(False, None)``.
    """
    if spec.growth_factor is None:
        return False, None
    a = spec.growth_factor
    x = np.concatenate([[0.0], np.logspace(-6, np.log10(hi), num)])
    r = spec.value(2 * x) - a * spec.value(x)
    c = max(0.0, float(r[x <= 1].max()))
    fit = (x > 1) & (x <= hi / 100)
    b = max(0.0, float((r[fit] / x[fit]).max())) if fit.any() else 0.0
    ok = bool(np.all(r <= b * x + c + 1e-9 * (1 + np.abs(r))))
    return ok, (a, b, c)
