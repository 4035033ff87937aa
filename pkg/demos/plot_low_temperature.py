"""
Low temperature
===============

As ``beta`` grows, ``tau2(beta J)`` behaves like ``D exp(C beta)`` with
``C = 2 (J_max + J_min)``. At ``beta = 300`` the gap is far below the
smallest double, so the eigenproblem switches to ``mpfr`` arithmetic;
results are compared in the log domain.
"""

import gmpy2

from cycleglauber import analysis, new_couplings, solve

cv = new_couplings([1.0, 0.8, 0.6, 1.0])
k = analysis.asymptotic_constants(cv)
print(f"C={k.c_rate} D={k.d_prefactor}")
for beta in (5, 10, 20, 40, 300):
    ratio = analysis.asymptotic_ratio(cv, beta)
    dev = analysis.asymptotic_deviation(cv, beta)
    print(f"beta={beta:<4} ratio={ratio:.12f} |ratio - 1|={float(dev):.3e}")

res = solve(cv.scaled(300))
print("precision", res.precision, "digits", res.dps, "log tau2", res.log_tau2)
with res.context():
    print("log10 gap", float(gmpy2.log10(res.gap)))
