"""Command-line interface: ``python -m skit <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or config, 3 solver not converged,
4 verification failed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .csvio import config_hash, format_number, provenance_lines, read_matrix, write_matrix, write_table
from .divergences import congestion, h_prime
from .errors import InvalidInput, NotConverged, SkitError, TooLarge
from .instances import REFERENCE_KINDS, random_problem, random_reference, random_weights
from .measures import Problem, density, make_problem, marginal_error
from .oracle import brute_force_polytope, brute_force_segment
from .solver_dual import Potentials, SolveResult, duality_gap, sinkhorn_generalized
from .solver_primal import cycle_descent, projected_gradient
from .verify import (
    check_cyclical_monotonicity,
    check_loop_condition,
    check_shape,
    recover_potentials,
    report_to_csv,
    report_to_text,
)

__all__ = ["run", "main", "EXIT_OK", "EXIT_INVALID", "EXIT_NOT_CONVERGED", "EXIT_VERIFY_FAILED"]

log = logging.getLogger("skit")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_VERIFY_FAILED = 4

TRACE_COLUMNS = ["iteration", "marginal_error", "objective", "gap"]
CYCLE_TRACE_COLUMNS = TRACE_COLUMNS + ["round", "cycle_length", "defect", "epsilon"]
COMPARE_COLUMNS = [
    "solver", "oracle", "solver_objective", "oracle_objective",
    "objective_difference", "max_coupling_difference", "converged", "seed",
]
SWEEP_COLUMNS = ["a", "objective", "iterations", "marginal_error", "shape_residual", "max_density"]
BENCH_COLUMNS = ["family", "m", "n", "solver", "iterations", "seconds", "marginal_error", "gap"]

DEMO_STRENGTHS = (0.0, 0.5, 1.0, 2.0, 4.0)
DEMO_SIZE = 10
DEMO_SEED = 7

# heatmap colour ramp: 0 -> RAMP_LOW, the largest value of the sweep -> RAMP_HIGH
RAMP_LOW = (255, 255, 255)
RAMP_HIGH = (8, 48, 107)


# ---------------------------------------------------------------------------
# helpers


def _setup_logging():
    level = os.environ.get("SKIT_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _provenance(sha: str, seed) -> list:
    return provenance_lines(sha, seed, __version__)


def _args_hash(args, skip=("func", "out_dir")) -> str:
    items = sorted((k, repr(v)) for k, v in vars(args).items() if k not in skip)
    return config_hash(repr(items).encode())


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, cfg: Optional[RunConfig] = None) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.seed if cfg is not None else 0


def _option(args, cfg: RunConfig, name, key=None, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.solver.get(key or name, default)


def _pick_method(args, cfg: RunConfig) -> str:
    method = _option(args, cfg, "solver", "method")
    if method is None:
        method = "dual" if cfg.problem.divergence.convex else "cycle"
    if method not in ("dual", "cycle", "pg"):
        raise InvalidInput(f"unknown solver {method!r}")
    return method


def _solve(args, cfg: RunConfig, seed: int) -> SolveResult:
    prob = cfg.problem
    method = _pick_method(args, cfg)
    tol = _option(args, cfg, "tol")
    max_iter = _option(args, cfg, "max_iter")
    if method == "dual":
        kw = {"damping": cfg.solver.get("damping", 1.0)}
        if tol is not None:
            kw["tol_marginal"] = tol
        if max_iter is not None:
            kw["max_iter"] = max_iter
        return sinkhorn_generalized(prob, **kw)
    if method == "cycle":
        kw = {"seed": seed, "max_len": _option(args, cfg, "max_cycle_len", default=3)}
        for key in ("budget", "restarts"):
            if key in cfg.solver:
                kw[key] = cfg.solver[key]
        if tol is not None:
            kw["tol_defect"] = tol
        if max_iter is not None:
            kw["max_rounds"] = max_iter
        return cycle_descent(prob, **kw)
    kw = {"seed": seed, "restarts": cfg.solver.get("restarts", 0)}
    if "step" in cfg.solver:
        kw["step"] = cfg.solver["step"]
    if max_iter is not None:
        kw["max_iter"] = max_iter
    return projected_gradient(prob, **kw)


def _write_potentials(path, pot: Potentials, prov):
    rows = [("phi", i, v) for i, v in enumerate(pot.phi)] + [("psi", j, v) for j, v in enumerate(pot.psi)]
    write_table(path, rows, ["side", "index", "value"], prov)


def _summary(res: SolveResult, prob: Problem, seed: int) -> str:
    fields = [
        ("method", res.method),
        ("divergence", prob.divergence.describe()),
        ("regime", prob.divergence.regime.value),
        ("shape", f"{prob.shape[0]}x{prob.shape[1]}"),
        ("objective", res.objective),
        ("marginal_error", res.marginal_error),
        ("iterations", res.iterations),
        ("converged", res.converged),
        ("gap", res.gap),
        ("seed", seed),
    ]
    fields += sorted((f"info.{k}", v) for k, v in res.info.items() if k != "seed")
    return "".join(f"{k} = {format_number(v)}\n" for k, v in fields)


def _with_prov(prov, text: str) -> str:
    return "".join(line + "\n" for line in prov) + text


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    seed = _seed(args, cfg)
    res = _solve(args, cfg, seed)
    out = _out_dir(args)
    prov = _provenance(cfg.sha256, seed)
    write_matrix(out / "coupling.csv", res.coupling.mass, provenance=prov)
    if res.potentials is not None:
        _write_potentials(out / "potentials.csv", res.potentials, prov)
    cols = CYCLE_TRACE_COLUMNS if res.method == "cycle" else TRACE_COLUMNS
    write_table(out / "trace.csv", [[row.get(c) for c in cols] for row in res.trace], cols, prov)
    (out / "summary.txt").write_text(_with_prov(prov, _summary(res, cfg.problem, seed)), encoding="utf-8")
    log.info("%s: objective %.12g after %d iterations", res.method, res.objective, res.iterations)
    if not res.converged:
        log.error("solver did not converge (marginal error %.3e)", res.marginal_error)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    prob = cfg.problem
    seed = _seed(args, cfg)
    Q = read_matrix(args.coupling)
    if Q.shape != prob.shape:
        raise InvalidInput(f"coupling has shape {Q.shape}, problem is {prob.shape}")
    if np.any(Q < 0):
        raise InvalidInput("coupling has negative entries")
    max_len = args.max_cycle_len or cfg.solver.get("max_cycle_len", 3)
    tol = args.tol if args.tol is not None else 1e-8
    mono = check_cyclical_monotonicity(Q, prob, max_len=max_len, tol=tol, seed=seed)
    loop_ok, loop_worst = check_loop_condition(Q, prob, max_len=max_len, tol=tol)
    pot, residual = recover_potentials(Q, prob)
    shape = check_shape(Q, prob, pot, tol=tol)
    gap = None
    if prob.divergence.convex:
        try:
            gap = duality_gap(prob, Q, pot)
        except SkitError:
            gap = None
    out = _out_dir(args)
    h = config_hash(cfg.sha256.encode() + Path(args.coupling).read_bytes())
    prov = _provenance(h, seed)
    (out / "shape_report.txt").write_text(_with_prov(prov, report_to_text(shape)), encoding="utf-8")
    (out / "shape_report.csv").write_text(_with_prov(prov, report_to_csv(shape)), encoding="utf-8")
    (out / "monotonicity_report.txt").write_text(_with_prov(prov, report_to_text(mono)), encoding="utf-8")
    (out / "monotonicity_report.csv").write_text(_with_prov(prov, report_to_csv(mono)), encoding="utf-8")
    _write_potentials(out / "recovered_potentials.csv", pot, prov)
    summary = [
        ("marginal_error", marginal_error(Q, prob)),
        ("monotonicity_passed", mono.passed),
        ("loop_condition", loop_ok),
        ("loop_worst", loop_worst),
        ("potential_residual", residual),
        ("shape_passed", shape.passed),
        ("duality_gap", gap),
    ]
    (out / "verify_summary.txt").write_text(
        _with_prov(prov, "".join(f"{k} = {format_number(v)}\n" for k, v in summary)), encoding="utf-8"
    )
    ok = mono.passed and loop_ok and shape.passed
    if not ok:
        log.error("verification failed: monotonicity %s, loop %s, shape %s", mono.passed, loop_ok, shape.passed)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_oracle_compare(args) -> int:
    cfg = load_config(args.config)
    prob = cfg.problem
    seed = _seed(args, cfg)
    res = _solve(args, cfg, seed)
    if prob.shape == (2, 2):
        ref = brute_force_segment(prob)
    else:
        ref = brute_force_polytope(prob, restarts=cfg.solver.get("restarts", 20), seed=seed)
    row = [
        res.method,
        ref.method,
        res.objective,
        ref.objective,
        res.objective - ref.objective,
        float(np.abs(res.coupling.mass - ref.coupling.mass).max()),
        res.converged,
        seed,
    ]
    out = _out_dir(args)
    write_table(out / "oracle_compare.csv", [row], COMPARE_COLUMNS, _provenance(cfg.sha256, seed))
    print(",".join(format_number(v) for v in row))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _parse_size(text: str):
    try:
        m, n = (int(s) for s in text.lower().split("x"))
    except ValueError:
        raise InvalidInput(f"size must look like MxN, got {text!r}") from None
    if m < 1 or n < 1:
        raise InvalidInput("sizes must be positive")
    return m, n


def _parse_params(items) -> dict:
    params = {}
    for item in items or ():
        if "=" not in item:
            raise InvalidInput(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k] = float(v)
        except ValueError:
            params[k] = v
    return params


def _toml_value(v) -> str:
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return format_number(v)


def cmd_gen(args) -> int:
    m, n = _parse_size(args.size)
    seed = _seed(args)
    params = _parse_params(args.param)
    prob = random_problem(m, n, args.divergence, params, seed, args.sharpness, args.reference)
    out = _out_dir(args)
    prov = _provenance(_args_hash(args), seed)
    write_matrix(out / "mu.csv", prob.mu.weights[None, :], provenance=prov)
    write_matrix(out / "nu.csv", prob.nu.weights[None, :], provenance=prov)
    write_matrix(out / "P.csv", prob.reference, provenance=prov)
    lines = [f"seed = {seed}", "", "[problem]", 'mu_file = "mu.csv"', 'nu_file = "nu.csv"',
             'reference_file = "P.csv"', "", "[divergence]", f'name = "{args.divergence}"']
    if params:
        inner = ", ".join(f"{k} = {_toml_value(v)}" for k, v in sorted(params.items()))
        lines.append(f"params = {{ {inner} }}")
    (out / "config.toml").write_text(_with_prov(prov, "\n".join(lines) + "\n"), encoding="utf-8")
    return EXIT_OK


def _colour(v: float, vmax: float) -> str:
    t = 0.0 if vmax <= 0 else min(max(v / vmax, 0.0), 1.0)
    r, g, b = (round(lo + t * (hi - lo)) for lo, hi in zip(RAMP_LOW, RAMP_HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(M, vmax: Optional[float] = None, cell: int = 24, title: str = "") -> str:
    """Static SVG heatmap: one rect per entry on a linear white-to-blue ramp."""
    M = np.asarray(M, dtype=float)
    m, n = M.shape
    if vmax is None:
        vmax = float(M.max(initial=0.0))
    top = 20 if title else 0
    w, h = n * cell, m * cell + top
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
    ]
    if title:
        parts.append(f'<text x="2" y="14" font-family="sans-serif" font-size="12">{title}</text>')
    for i in range(m):
        for j in range(n):
            parts.append(
                f'<rect x="{j * cell}" y="{top + i * cell}" width="{cell}" height="{cell}" '
                f'fill="{_colour(M[i, j], vmax)}"><title>{M[i, j]:.6g}</title></rect>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def congestion_instance(size: int = DEMO_SIZE, seed: int = DEMO_SEED):
    """Marginals and reference of the congestion demo."""
    rng = np.random.default_rng(seed)
    mu = random_weights(rng, size)
    nu = random_weights(rng, size)
    P = random_reference(rng, mu, nu, "structured")
    return mu, nu, P


def congestion_residual(Q, prob: Problem, pot: Potentials) -> float:
    """max |1 + log d + f(d) - phi - psi| over supp(P)."""
    d = density(Q, prob.reference).values
    pos = prob.reference > 0
    lhs = np.asarray(h_prime(prob.divergence, np.maximum(d[pos], 1e-300)))
    return float(np.abs(lhs - pot.table()[pos]).max())


def cmd_demo_congestion(args) -> int:
    seed = args.seed if args.seed is not None else DEMO_SEED
    strengths = args.strengths if args.strengths else list(DEMO_STRENGTHS)
    mu, nu, P = congestion_instance(args.size, seed)
    out = _out_dir(args)
    prov = _provenance(_args_hash(args), seed)
    results = []
    for a in strengths:
        prob = make_problem(mu, nu, P, congestion(a))
        kw = {}
        if args.tol is not None:
            kw["tol_marginal"] = args.tol
        if args.max_iter is not None:
            kw["max_iter"] = args.max_iter
        res = sinkhorn_generalized(prob, **kw)
        resid = congestion_residual(res.coupling.mass, prob, res.potentials)
        dmax = float(density(res.coupling.mass, P).values.max())
        results.append((a, res, resid, dmax))
        log.info("a = %g: residual %.3e", a, resid)
    vmax = max(float(r.coupling.mass.max()) for _, r, _, _ in results)
    rows = []
    for a, res, resid, dmax in results:
        tag = format_number(float(a)).replace(".", "p")
        write_matrix(out / f"coupling_a{tag}.csv", res.coupling.mass, provenance=prov)
        (out / f"heatmap_a{tag}.svg").write_text(
            heatmap_svg(res.coupling.mass, vmax, title=f"a = {a:g}"), encoding="utf-8"
        )
        rows.append([float(a), res.objective, res.iterations, res.marginal_error, resid, dmax])
    write_table(out / "congestion_sweep.csv", rows, SWEEP_COLUMNS, prov)
    for row in rows:
        print(",".join(format_number(v) for v in row))
    return EXIT_OK if all(r.converged for _, r, _, _ in results) else EXIT_NOT_CONVERGED


def _bench_one(family, size, seed, tol):
    prob = random_problem(size, size, family, seed=seed)
    t0 = time.perf_counter()
    res = sinkhorn_generalized(prob, tol_marginal=tol)
    dt = time.perf_counter() - t0
    return [family, size, size, res.method, res.iterations, dt, res.marginal_error, res.gap]


def cmd_bench(args) -> int:
    seed = _seed(args)
    sizes = args.sizes or [4, 8, 16, 32]
    tol = args.tol if args.tol is not None else 1e-10
    jobs = [(fam, s, seed + k, tol) for fam in args.families for k, s in enumerate(sizes)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        rows = list(pool.map(lambda j: _bench_one(*j), jobs))
    out = _out_dir(args)
    write_table(out / "bench.csv", rows, BENCH_COLUMNS, _provenance(_args_hash(args), seed))
    for row in rows:
        print(",".join(format_number(v) for v in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--tol", type=float, default=None, help="solver / verification tolerance")
    p.add_argument("--max-iter", type=int, default=None, help="sweep or round limit")
    p.add_argument("--solver", choices=("dual", "cycle", "pg"), default=None)
    p.add_argument("--max-cycle-len", type=int, default=None)
    p.add_argument("--format", choices=("csv",), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skit", description="Divergence-regularised coupling solver and verifier.")
    parser.add_argument("--version", action="version", version=f"skit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the problem in a config file")
    p.add_argument("config")
    _common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify a coupling against a config")
    p.add_argument("config")
    p.add_argument("--coupling", required=True, help="coupling CSV")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle-compare", help="compare a solver with the brute-force oracle")
    p.add_argument("config")
    _common(p)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("gen", help="write a seeded random instance and its config")
    p.add_argument("size", help="MxN")
    p.add_argument("--divergence", default="entropy")
    p.add_argument("--param", action="append", help="divergence parameter key=value (repeatable)")
    p.add_argument("--sharpness", type=float, default=1.0, help="0 gives uniform marginals")
    p.add_argument("--reference", choices=REFERENCE_KINDS, default="random")
    _common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("demo-congestion", help="congestion strength sweep with SVG heatmaps")
    p.add_argument("--strengths", type=float, nargs="+", default=None)
    p.add_argument("--size", type=int, default=DEMO_SIZE)
    _common(p)
    p.set_defaults(func=cmd_demo_congestion)

    p = sub.add_parser("bench", help="timing over a size ladder")
    p.add_argument("--sizes", type=int, nargs="+", default=None)
    p.add_argument("--families", nargs="+", default=["entropy", "quadratic"])
    p.add_argument("--threads", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except (InvalidInput, TooLarge) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except NotConverged as exc:
        log.error("%s", exc)
        return EXIT_NOT_CONVERGED
    except SkitError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID


def main():
    sys.exit(run())
