"""
A small benchmark with front metrics and performance profiles
=============================================================

Runs both solvers on three problems, then reads the per-problem table
(hypervolume, purity, spreads) and builds iteration profiles.
"""

import numpy as np

from cubicvec import cli
from cubicvec.metrics import performance_profile

spec = cli.RunSpec(problems=("JOS1", "PNR", "MOP5"), solvers=("cn", "sd"), seeds=tuple(range(5)))
bundle = cli.run_benchmark(spec, workers=1)

for name, row in bundle["metrics"]["problems"].items():
    print(name, "reference point", np.round(row["reference_point"], 3))
    for solver, m in row["solvers"].items():
        print(f"  {solver}: converged {m['converged']}/{m['runs']}  median iters {m['median_iterations']}"
              f"  HV {m['hypervolume']}  purity {m['purity']}")

# iteration profile over converged runs; failures count as +inf
costs = {s: [] for s in spec.solvers}
for name in spec.problems:
    for s in spec.solvers:
        its = [r.iterations for r in bundle["records"]
               if r.problem == name and r.solver == s and r.status == "Converged"]
        costs[s].append(float(np.median(its)) + 1 if its else np.inf)
curve = performance_profile(costs, problems=list(spec.problems))
for s, rho in curve.rho.items():
    print(s, "rho(tau):", np.round(rho, 2), "at tau", np.round(curve.tau, 2))
