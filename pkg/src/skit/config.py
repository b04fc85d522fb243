"""Problem bundles from TOML configuration files.

See ``docs/config.md`` for the schema.  A minimal bundle::

    seed = 0

    [problem]
    mu = [0.6, 0.4]
    nu = [0.5, 0.5]
    reference_file = "P.csv"

    [divergence]
    name = "entropy"
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .csvio import config_hash, read_matrix, read_vector
from .divergences import make_divergence
from .errors import InvalidInput
from .measures import Problem, make_measure

__all__ = ["RunConfig", "load_config", "parse_config"]

SOLVER_KEYS = {"method", "tol", "max_iter", "max_cycle_len", "budget", "restarts", "step", "damping"}


@dataclass
class RunConfig:
    problem: Problem
    seed: int = 0
    solver: dict = field(default_factory=dict)
    sha256: str = ""
    path: Optional[Path] = None


def _vector(sec, key, base, header):
    if key in sec:
        return np.asarray(sec[key], dtype=float)
    if key + "_file" in sec:
        return read_vector(base / sec[key + "_file"], header)
    raise InvalidInput(f"[problem] needs '{key}' or '{key}_file'")


def parse_config(data: bytes, base: Path = Path(".")) -> RunConfig:
    try:
        doc = tomllib.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise InvalidInput(f"malformed config: {exc}") from None
    sec = doc.get("problem")
    if not isinstance(sec, dict):
        raise InvalidInput("config needs a [problem] table")
    header = sec.get("header")
    normalize = bool(sec.get("normalize", False))
    mu = make_measure(_vector(sec, "mu", base, header), normalize=normalize, label="mu")
    nu = make_measure(_vector(sec, "nu", base, header), normalize=normalize, label="nu")
    if "reference" in sec:
        P = np.asarray(sec["reference"], dtype=float)
    elif "reference_file" in sec:
        P = read_matrix(base / sec["reference_file"], header)
    else:
        P = np.outer(mu.weights, nu.weights)
    if normalize and P.sum() > 0:
        P = P / P.sum()

    dsec = doc.get("divergence")
    if not isinstance(dsec, dict) or "name" not in dsec:
        raise InvalidInput("config needs [divergence] with a 'name'")
    try:
        spec = make_divergence(dsec["name"], dsec.get("params", {}))
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"bad divergence: {exc}") from None

    solver = dict(doc.get("solver", {}))
    unknown = set(solver) - SOLVER_KEYS
    if unknown:
        raise InvalidInput(f"unknown [solver] keys: {sorted(unknown)}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise InvalidInput("seed must be an integer")
    return RunConfig(Problem(mu, nu, P, spec), seed, solver, config_hash(data))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InvalidInput(f"cannot read config: {exc}") from None
    cfg = parse_config(data, path.parent)
    cfg.path = path
    return cfg
