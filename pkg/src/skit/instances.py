"""Seeded random problem instances."""

from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from .divergences import make_divergence
from .errors import InvalidInput
from .measures import Problem, make_problem

__all__ = ["REFERENCE_KINDS", "random_weights", "random_reference", "random_problem"]

REFERENCE_KINDS = ("independent", "random", "structured")


def random_weights(rng: np.random.Generator, k: int, sharpness: float = 1.0) -> np.ndarray:
    """Softmax of ``sharpness`` times Gaussian noise; 0 gives the uniform vector."""
    z = sharpness * rng.standard_normal(k)
    w = np.exp(z - z.max())
    return w / w.sum()


def random_reference(rng, mu, nu, kind: str = "random", bandwidth: float = 0.1) -> np.ndarray:
    """Reference measure of full support.

    ``independent`` is mu x nu, ``random`` has i.i.d. uniform entries and
    ``structured`` is mu x nu reweighted by a Gaussian kernel in the
    normalised indices i/m, j/n.
    """
    m, n = len(mu), len(nu)
    if kind == "independent":
        P = np.outer(mu, nu)
    elif kind == "random":
        P = rng.uniform(0.05, 1.0, size=(m, n))
    elif kind == "structured":
        x = np.arange(m)[:, None] / max(m - 1, 1)
        y = np.arange(n)[None, :] / max(n - 1, 1)
        P = np.outer(mu, nu) * np.exp(-((x - y) ** 2) / bandwidth)
    else:
        raise InvalidInput(f"unknown reference kind {kind!r}; expected one of {REFERENCE_KINDS}")
    return P / P.sum()


def random_problem(
    m: int,
    n: int,
    family: str = "entropy",
    params: Optional[Mapping] = None,
    seed: int = 0,
    sharpness: float = 1.0,
    reference: str = "random",
) -> Problem:
    """Random instance with strictly positive marginals and reference."""
    if m < 1 or n < 1:
        raise InvalidInput("sizes must be positive")
    rng = np.random.default_rng(seed)
    mu = random_weights(rng, m, sharpness)
    nu = random_weights(rng, n, sharpness)
    P = random_reference(rng, mu, nu, reference)
    return make_problem(mu, nu, P, make_divergence(family, params))
