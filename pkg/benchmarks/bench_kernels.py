"""Time the simplex kernels with numba and with the plain numpy fallback.

    python benchmarks/bench_kernels.py [fixture ...]

Each backend runs in its own interpreter because the choice is made at import
time.  Per fixture we report the first solve (numba compiles here, or loads its
cache) and the best of three warm solves.
"""
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from mmassign._accel import backend
from mmassign.cli import _scenario_text
from mmassign.network import load_scenario
from mmassign.paths import build_catalog
from mmassign.model import build_program
from mmassign.solver import branch_and_bound, solve_lp_relaxation

rows = []
for name in sys.argv[1:]:
    s = load_scenario(_scenario_text(name)[0])
    prog = build_program(s, build_catalog(s)).program
    t = time.perf_counter(); branch_and_bound(prog); first = time.perf_counter() - t
    warm = []
    for _ in range(3):
        t = time.perf_counter(); sol = branch_and_bound(prog); warm.append(time.perf_counter() - t)
    t = time.perf_counter(); lp = solve_lp_relaxation(prog.relaxed()); lp_t = time.perf_counter() - t
    rows.append(dict(fixture=name, vars=len(prog.variables), rows=len(prog.constraints), first=first,
                     warm=min(warm), lp=lp_t, nodes=sol.nodes, objective=sol.objective))
print(json.dumps({"backend": backend(), "rows": rows}))
"""

DEFAULT = ["synth_s1", "synth_s2", "synth_s3", "synth_congested", "micro_all_sms"]


def run(names, no_numba):
    env = dict(os.environ, MMASSIGN_NO_NUMBA="1" if no_numba else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, *names], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out)


def main(argv):
    names = argv or DEFAULT
    res = [run(names, False), run(names, True)]
    print(f"{'fixture':<18}{'vars':>6}{'rows':>6}  {'backend':<7}{'first s':>9}{'warm s':>9}{'root lp s':>11}")
    for i, name in enumerate(names):
        for r in res:
            row = r["rows"][i]
            print(f"{name:<18}{row['vars']:>6}{row['rows']:>6}  {r['backend']:<7}"
                  f"{row['first']:>9.3f}{row['warm']:>9.3f}{row['lp']:>11.3f}")
        a, b = (r["rows"][i]["objective"] for r in res)
        if abs(a - b) > 1e-6 * max(1.0, abs(a)):
            print(f"  objectives differ: {a} vs {b}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
