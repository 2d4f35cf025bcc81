"""
The cubic subproblem on a one-dimensional example
=================================================

REM1 maps a scalar x to two objectives. At x = 0.04 with M = 24 the cubic
model's max over the two objectives has a nonzero minimizer, and a plain
dual ascent does not find it.
"""

import numpy as np

from cubicvec import OrderingCone, lookup, solve_direction
from cubicvec.subproblem import q_value

prob = lookup("REM1")
K = OrderingCone.orthant(2)
pt = prob.evaluate([0.04])
print("f(0.04) =", pt.f)
print("Jf(0.04) =", pt.J.ravel())

# solve the subproblem and inspect the certificate
sol = solve_direction(pt, K, 24.0)
print("d =", sol.d, " primal =", sol.primal, " dual =", sol.dual, " certified =", sol.certified)

# the max-model on a grid shows why: two basins, the left one deeper
grid = np.linspace(-0.5, 0.3, 17)
for d in grid:
    print(f"  d={d:+.2f}  q={q_value(pt, K, 24.0, [d]):+.5f}")

# one step of the method lands close to (-0.838, -0.116)
print("f(x + d) =", prob.eval_f(pt.x + sol.d))
