"""
The reduction against the full chain
====================================

The heat-bath chain lives on ``2**n`` configurations. Its second eigenvalue
is ``1 - (1 - lambda1) / n`` with ``lambda1`` the Perron value of an
``n x n`` matrix, and the eigenfunction is linear in the spins. Here the
dense matrix is built and diagonalised to confirm both facts.
"""

import numpy as np

from cycleglauber import new_couplings, oracle, spectral

cv = new_couplings([0.3, 0.5, 0.7, 0.2, 1.1])
a = oracle.build_transition_matrix(cv)
print("dimension", a.dim, "row sums off by", a.row_sum_residual())

res = oracle.linear_restriction(cv)
pair = spectral.solve(cv)
print("mu2 (dense)        ", res.mu2)
print("1 - (1 - lambda1)/n", 1 - (1 - pair.lambda1) / cv.n)
print("corollary residual ", res.corollary_residual)

# A applied to each spin stays in the span of the spins, with the reduced matrix as coefficients
n = cv.n
expected = (1 - 1 / n) * np.eye(n) + spectral.build_m(cv).to_dense() / n
print("restriction residual", np.max(np.abs(res.restricted_l - expected)))

# the linear eigenfunction uses the left Perron vector, q_i x_i
print("linear eigenfunction residual", res.linear_eigen_residual)
print("share of mu2 eigenfunction in span of spins", oracle.second_eigenfunction_linearity(a))
