"""Congestion pricing and the command-line workflow.

Run with ``python demos/03_congestion_and_cli.py [out_dir]``.

Adding a congestion cost F(d) with F' = a d to the entropy penalises cells
whose density d = dQ/dP grows large.  The sweep below raises a and shows
the peak density falling.  The second half drives the same machinery
through the CLI: generate an instance, solve it, then verify the written
coupling from disk.
"""

import sys
import tempfile
from pathlib import Path

from skit import congestion, density, make_problem, sinkhorn_generalized
from skit.cli import congestion_instance, run

mu, nu, P = congestion_instance(size=8, seed=7)
print(" a     objective     max density")
for a in (0.0, 1.0, 4.0):
    prob = make_problem(mu, nu, P, congestion(a))
    res = sinkhorn_generalized(prob)
    dmax = density(res.coupling.mass, P).values.max()
    print(f"{a:4.1f}  {res.objective:12.8f}  {dmax:10.6f}")

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="skit-demo-"))
inst = out / "instance"

# gen writes mu.csv, nu.csv, P.csv and a config.toml that points at them.
assert run(["gen", "4x5", "--divergence", "congestion", "--param", "a=2",
            "--seed", "11", "--out-dir", str(inst)]) == 0
assert run(["solve", str(inst / "config.toml"), "--out-dir", str(out / "solve")]) == 0
code = run(["verify", str(inst / "config.toml"), "--coupling", str(out / "solve" / "coupling.csv"),
            "--out-dir", str(out / "verify")])
print("verify exit code", code)
print((out / "verify" / "verify_summary.txt").read_text())

# The sweep subcommand also draws one SVG heatmap per strength.
run(["demo-congestion", "--strengths", "0", "2", "--size", "6", "--out-dir", str(out / "sweep")])
print("outputs in", out)
print(sorted(p.name for p in (out / "sweep").iterdir()))
