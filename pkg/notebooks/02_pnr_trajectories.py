"""
Cubic Newton against steepest descent on PNR
============================================

Both methods start from the same seeded points. The cubic method stops on
its measure mu or when the step vanishes (a fixed point). At such fixed
points mu stays positive under both the generator and the hull variant.
"""

import numpy as np

from cubicvec import (SolverConfig, cone_from_spec, lookup, run_cubic_newton,
                      run_steepest_descent, sample_initial)
from cubicvec.subproblem import mu_value

prob = lookup("PNR")
K = cone_from_spec("auto", prob.p)

for seed in range(5):
    x0 = sample_initial(prob, seed)
    cn = run_cubic_newton(prob, K, x0)
    sd = run_steepest_descent(prob, K, x0)
    print(f"seed {seed}: x0={np.round(x0, 3)}")
    print(f"  cn {cn.status:<10} iters={cn.n_iter:<4} mu={cn.final_mu:.2e} f={np.round(cn.final_f, 4)}")
    print(f"  sd {sd.status:<10} iters={sd.n_iter:<4} |d|={sd.final_mu:.2e} f={np.round(sd.final_f, 4)}")

# at a stalled point d = 0 solves the subproblem, yet both measures stay positive:
# with this cone the scalarized Hessians are indefinite even though f is convex
tr = run_cubic_newton(prob, K, sample_initial(prob, 0))
last = tr.iterations[-1]
pt = prob.evaluate(last.x)
print("stalled at", last.x)
print("  generator mu:", mu_value(pt, K, last.M, 1.5, "generator"))
print("  hull mu     :", mu_value(pt, K, last.M, 1.5, "hull"))

# the hull variant as the stopping rule
tr = run_cubic_newton(prob, K, sample_initial(prob, 0), SolverConfig(measure="hull"))
print("hull-measure run:", tr.status, tr.n_iter, "iterations")
