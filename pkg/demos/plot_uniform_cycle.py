"""
Relaxation time of a uniform cycle
==================================

With every coupling equal, the all-ones vector is the Perron vector of the
reduced matrix, so ``lambda1 = tanh(2J)`` and ``tau2 = (exp(4J) + 1) / 2``
whatever the length of the cycle.
"""

import math

from cycleglauber import new_couplings, solve

for j in (0.1, 0.5, 1.0, 2.0):
    exact = (math.exp(4 * j) + 1) / 2
    for n in (3, 8, 64):
        res = solve(new_couplings([j] * n))
        print(f"J={j:<4} n={n:<3} tau2={res.tau2:.12f} closed form={exact:.12f} "
              f"power steps={res.iterations}")

# The gradient of lambda1 is positive in every coupling
from cycleglauber.spectral import lambda_gradient

print(lambda_gradient(new_couplings([0.3, 0.5, 0.7, 0.2])))
