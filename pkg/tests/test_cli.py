import math
import os
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from skit import __version__
from skit.cli import RAMP_HIGH, RAMP_LOW, heatmap_svg, run
from skit.csvio import read_matrix, read_table

from _oracles import entropy_root

GOLDEN = Path(__file__).parent / "golden"

ENTROPY22 = """seed = 0

[problem]
mu = [0.6, 0.4]
nu = [0.5, 0.5]
reference = [[0.4, 0.1], [0.1, 0.4]]

[divergence]
name = "{name}"
{params}
"""


def _config(tmp_path, name="entropy", params="", text=None):
    path = tmp_path / "run.toml"
    path.write_text(text if text is not None else ENTROPY22.format(name=name, params=params))
    return path


def _tokens(line):
    return [t.strip() for t in line.replace("=", ",").split(",")]


def _same_value(a, b):
    try:
        x, y = float(a), float(b)
    except ValueError:
        return a == b
    if math.isnan(x) or math.isnan(y):
        return math.isnan(x) and math.isnan(y)
    return x == y or abs(x - y) <= 1e-12


def assert_matches_golden(produced: Path, golden: Path):
    """Comment lines and every non-numeric token exactly; numbers to 1e-12."""
    got = produced.read_text().splitlines()
    want = golden.read_text().splitlines()
    assert len(got) == len(want), produced.name
    for g, w in zip(got, want):
        if w.startswith("#"):
            assert g == w
            continue
        tg, tw = _tokens(g), _tokens(w)
        assert len(tg) == len(tw), (g, w)
        assert all(_same_value(a, b) for a, b in zip(tg, tw)), (g, w)


# --- golden schemas --------------------------------------------------------


@pytest.mark.parametrize(
    "args,folder",
    [
        (["solve"], "solve"),
        (["solve", "--solver", "cycle"], "solve_cycle"),
        (["oracle-compare"], "oracle_compare"),
    ],
    ids=["solve", "solve-cycle", "oracle-compare"],
)
def test_golden_outputs(tmp_path, args, folder):
    cfg = tmp_path / "trivial.toml"
    cfg.write_bytes((GOLDEN / "trivial.toml").read_bytes())
    assert run(args[:1] + [str(cfg)] + args[1:] + ["--out-dir", str(tmp_path)]) == 0
    for g in sorted((GOLDEN / folder).iterdir()):
        assert_matches_golden(tmp_path / g.name, g)


def test_golden_verify(tmp_path):
    cfg = tmp_path / "trivial.toml"
    cfg.write_bytes((GOLDEN / "trivial.toml").read_bytes())
    coupling = tmp_path / "coupling.csv"
    coupling.write_bytes((GOLDEN / "solve" / "coupling.csv").read_bytes())
    out = tmp_path / "out"
    assert run(["verify", str(cfg), "--coupling", str(coupling), "--out-dir", str(out)]) == 0
    for g in sorted((GOLDEN / "verify").iterdir()):
        assert_matches_golden(out / g.name, g)


def test_golden_gen(tmp_path):
    assert run(["gen", "2x3", "--seed", "3", "--out-dir", str(tmp_path)]) == 0
    for g in sorted((GOLDEN / "gen").iterdir()):
        assert_matches_golden(tmp_path / g.name, g)


# --- solve / verify --------------------------------------------------------


def test_solve_entropy(tmp_path):
    assert run(["solve", str(_config(tmp_path)), "--out-dir", str(tmp_path)]) == 0
    Q = read_matrix(tmp_path / "coupling.csv")
    assert Q[0, 0] == pytest.approx(entropy_root(), abs=1e-4)
    header, rows = read_table(tmp_path / "potentials.csv")
    assert header == ["side", "index", "value"] and len(rows) == 4


def test_solve_then_verify(tmp_path):
    cfg = _config(tmp_path)
    assert run(["solve", str(cfg), "--out-dir", str(tmp_path)]) == 0
    code = run(["verify", str(cfg), "--coupling", str(tmp_path / "coupling.csv"), "--out-dir", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "shape_report.txt").read_text()
    assert "passed = true" in text


def test_verify_failure_exit_code(tmp_path):
    cfg = _config(tmp_path)
    Q = tmp_path / "bad.csv"
    Q.write_text("0.45,0.15\n0.05,0.35\n")
    assert run(["verify", str(cfg), "--coupling", str(Q), "--out-dir", str(tmp_path)]) == 4


def test_solve_nonconvex_defaults_to_cycle(tmp_path):
    cfg = _config(tmp_path, "nonconvex_test", "params = { a = 2.0 }")
    assert run(["solve", str(cfg), "--out-dir", str(tmp_path)]) == 0
    summary = (tmp_path / "summary.txt").read_text()
    assert "method = cycle" in summary and "necessary-condition" in summary


def test_solve_pg(tmp_path):
    cfg = _config(tmp_path, "quadratic")
    assert run(["solve", str(cfg), "--solver", "pg", "--out-dir", str(tmp_path)]) == 0
    assert read_matrix(tmp_path / "coupling.csv")[0, 0] == pytest.approx(0.45, abs=1e-5)


def test_not_converged_exit_code(tmp_path):
    assert run(["solve", str(_config(tmp_path)), "--max-iter", "1", "--out-dir", str(tmp_path)]) == 3


def test_malformed_marginals(tmp_path):
    cfg = _config(tmp_path, text=ENTROPY22.format(name="entropy", params="").replace("[0.6, 0.4]", "[0.6, 0.5]"))
    assert run(["solve", str(cfg), "--out-dir", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "text",
    [
        "this is = not toml [",
        "seed = 0\n[divergence]\nname = 'entropy'\n",
        "[problem]\nmu = [1.0]\nnu = [1.0]\n[divergence]\nname = 'nope'\n",
        "[problem]\nmu = [1.0]\nnu = [1.0]\n[divergence]\nname = 'entropy'\n[solver]\nbogus = 1\n",
    ],
    ids=["syntax", "no-problem", "bad-divergence", "bad-solver-key"],
)
def test_invalid_configs(tmp_path, text):
    assert run(["solve", str(_config(tmp_path, text=text)), "--out-dir", str(tmp_path)]) == 2


def test_missing_config(tmp_path):
    assert run(["solve", str(tmp_path / "absent.toml")]) == 2


def test_unknown_subcommand():
    assert run(["frobnicate"]) == 2


def test_determinism(tmp_path):
    cfg = _config(tmp_path, "nonconvex_test", "params = { a = 2.0 }")
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["solve", str(cfg), "--seed", "5", "--out-dir", str(out)]) == 0
    for f in ("coupling.csv", "potentials.csv", "trace.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_provenance_header(tmp_path):
    run(["solve", str(_config(tmp_path)), "--seed", "11", "--out-dir", str(tmp_path)])
    lines = (tmp_path / "coupling.csv").read_text().splitlines()
    assert lines[0] == f"# skit {__version__}"
    assert lines[1].startswith("# config_sha256 = ") and len(lines[1].split()[-1]) == 64
    assert lines[2] == "# seed = 11"


# --- gen -------------------------------------------------------------------


def test_gen_round_trip(tmp_path):
    assert run(["gen", "3x4", "--divergence", "power", "--param", "p=3", "--reference", "structured",
                "--seed", "2", "--out-dir", str(tmp_path)]) == 0
    assert 'params = { p = 3 }' in (tmp_path / "config.toml").read_text()
    assert run(["solve", str(tmp_path / "config.toml"), "--out-dir", str(tmp_path / "s")]) == 0
    assert read_matrix(tmp_path / "s" / "coupling.csv").shape == (3, 4)


@pytest.mark.parametrize("size", ["3", "ax2", "0x3"])
def test_gen_bad_size(tmp_path, size):
    assert run(["gen", size, "--out-dir", str(tmp_path)]) == 2


# --- demo / bench ----------------------------------------------------------


def test_demo_congestion(tmp_path, capsys):
    assert run(["demo-congestion", "--strengths", "0", "2", "--size", "6", "--out-dir", str(tmp_path)]) == 0
    header, rows = read_table(tmp_path / "congestion_sweep.csv")
    assert header[0] == "a" and len(rows) == 2
    resid = [float(r[header.index("shape_residual")]) for r in rows]
    assert max(resid) <= 1e-8
    # stronger congestion flattens the density
    dmax = [float(r[header.index("max_density")]) for r in rows]
    assert dmax[1] < dmax[0]
    for tag in ("0", "2"):
        root = ET.parse(tmp_path / f"heatmap_a{tag}.svg").getroot()
        assert root.tag.endswith("svg")
        assert len([e for e in root.iter() if e.tag.endswith("rect")]) == 36


def test_heatmap_ramp_endpoints():
    svg = heatmap_svg(np.array([[0.0, 1.0]]))
    lo = "#%02x%02x%02x" % RAMP_LOW
    hi = "#%02x%02x%02x" % RAMP_HIGH
    assert f'fill="{lo}"' in svg and f'fill="{hi}"' in svg


def test_bench(tmp_path):
    assert run(["bench", "--sizes", "3", "4", "--families", "entropy", "--threads", "2",
                "--out-dir", str(tmp_path)]) == 0
    header, rows = read_table(tmp_path / "bench.csv")
    assert header[:3] == ["family", "m", "n"] and [r[1] for r in rows] == ["3", "4"]


def test_module_entry_point(tmp_path):
    env = dict(os.environ, SKIT_LOG="ERROR")
    proc = subprocess.run([sys.executable, "-m", "skit", "--version"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and __version__ in proc.stdout
