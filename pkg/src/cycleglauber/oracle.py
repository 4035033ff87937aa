"""Brute-force checks on the full 2**n x 2**n heat-bath chain.

Nothing here uses the reduced matrix except to compare against it: the
transition matrix is assembled configuration by configuration, symmetrised
by detailed balance and diagonalised densely.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import spectral
from .cycle_model import (
    CouplingVector,
    all_spins,
    local_fields,
    log_gibbs_weights,
    scaled_hyperbolics,
)
from .errors import ClosureViolation, NumericalFailure, TooLarge, ZeroMatrix

__all__ = [
    "DenseTransitionMatrix",
    "OracleResult",
    "build_transition_matrix",
    "second_eigenvalue",
    "spectrum",
    "linear_restriction",
    "second_eigenfunction_linearity",
    "default_cap",
]

CAP_ENV = "CYCLEGLAUBER_ORACLE_CAP"


def default_cap() -> int:
    return int(os.environ.get(CAP_ENV, 12))


@dataclass(frozen=True, eq=False)
class DenseTransitionMatrix:
    """Heat-bath transition matrix on all ``2**n`` configurations.

    ``log_flip[k, x]`` is the log of the flip probability of site ``x`` in
    configuration ``k`` and ``pi_log`` the unnormalised log Gibbs weights;
    together they allow symmetrisation without exponentiating ``pi``.
    """

    n: int
    dim: int
    entries: np.ndarray
    pi_log: np.ndarray
    log_flip: np.ndarray
    spins: np.ndarray

    def neighbour(self, site: int) -> np.ndarray:
        return np.arange(self.dim) ^ (1 << site)

    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.entries.sum(axis=1) - 1.0)))

    def detailed_balance_residual(self) -> float:
        """Max of ``|log A(s, s^x) - log A(s^x, s) - (pi_log(s^x) - pi_log(s))|``."""
        worst = 0.0
        for x in range(self.n):
            nb = self.neighbour(x)
            lhs = self.log_flip[:, x] - self.log_flip[nb, x]
            rhs = self.pi_log[nb] - self.pi_log
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Dense cross-check of the reduction.

    ``restricted_l[i, j]`` is the coefficient of ``s_j`` in ``A s_i``;
    ``coeffs_ab[i] = (a_i, b_i)`` with ``tanh(J_{i-1} s_{i-1} + J_i s_{i+1}) = a_i s_{i-1} + b_i s_{i+1}``.
    """

    mu: np.ndarray
    restricted_l: np.ndarray
    coeffs_ab: np.ndarray
    corollary_residual: float
    linear_eigen_residual: float
    fit_residual: float
    coeff_residual: float
    lambda1: float

    @property
    def mu2(self) -> float:
        return float(self.mu[1])


def _log_flip(spins, couplings):
    # log of (1 - s tanh h)/2 = -log(1 + exp(2 s h))
    u = spins * local_fields(couplings, spins)
    return -np.logaddexp(0.0, 2.0 * u)


def build_transition_matrix(couplings: CouplingVector, cap: int | None = None) -> DenseTransitionMatrix:
    """Assemble ``A(s, s^x) = flip_probability(s, x) / n`` densely.

    ``cap`` bounds ``n`` (default 12, or ``$CYCLEGLAUBER_ORACLE_CAP``); raise
    it explicitly to go further.
    """
    n = couplings.n
    cap = default_cap() if cap is None else cap
    if n > cap:
        raise TooLarge(f"n = {n} exceeds the oracle cap of {cap}")
    dim = 1 << n
    spins = all_spins(n)
    fs = spins.astype(float)
    flip = 0.5 * (1.0 - fs * np.tanh(local_fields(couplings, fs)))
    entries = np.zeros((dim, dim))
    rows = np.arange(dim)
    for x in range(n):
        entries[rows, rows ^ (1 << x)] = flip[:, x] / n
    entries[rows, rows] = 1.0 - flip.sum(axis=1) / n
    return DenseTransitionMatrix(
        n=n, dim=dim, entries=entries,
        pi_log=log_gibbs_weights(couplings, fs),
        log_flip=_log_flip(fs, couplings),
        spins=spins,
    )


def _symmetrized(a: DenseTransitionMatrix) -> np.ndarray:
    # pi^{1/2} A pi^{-1/2}, entry by entry in the log domain
    sym = np.diag(np.diag(a.entries)).astype(float)
    rows = np.arange(a.dim)
    log_n = np.log(a.n)
    for x in range(a.n):
        nb = a.neighbour(x)
        sym[rows, nb] = np.exp(a.log_flip[:, x] - log_n + 0.5 * (a.pi_log - a.pi_log[nb]))
    return 0.5 * (sym + sym.T)


def spectrum(a: DenseTransitionMatrix, vectors: bool = False):
    """Eigenvalues of ``A`` in decreasing order (and ``pi``-orthonormal eigenfunctions)."""
    sym = _symmetrized(a)
    try:
        if vectors:
            w, v = np.linalg.eigh(sym)
        else:
            w = np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    order = np.argsort(w)[::-1]
    if not vectors:
        return w[order]
    # eigenvectors of the symmetrised matrix are pi^{1/2} f
    return w[order], v[:, order]


def second_eigenvalue(a: DenseTransitionMatrix) -> float:
    return float(spectrum(a)[1])


def second_eigenfunction_linearity(a: DenseTransitionMatrix) -> float:
    """Fraction of the ``L^2(pi)`` norm of the ``mu2`` eigenfunction lying in ``span{s_i}``."""
    _, vecs = spectrum(a, vectors=True)
    v = vecs[:, 1]
    # with u = pi^{1/2} f we project u onto span{pi^{1/2} s_i}
    root_pi = np.exp(0.5 * (a.pi_log - a.pi_log.max()))
    basis = root_pi[:, None] * a.spins.astype(float)
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    proj = basis @ coef
    return float(proj @ proj / (v @ v))


def linear_restriction(couplings: CouplingVector, cap: int | None = None,
                       closure_tol: float = 1e-12) -> OracleResult:
    """Apply ``A`` to each ``f_i(s) = s_i`` and read off the restricted matrix.

    The spin basis is orthogonal under counting measure, so coefficients
    come from inner products over all configurations; the fit residual must
    vanish to rounding, otherwise :class:`ClosureViolation` is raised.
    """
    a = build_transition_matrix(couplings, cap=cap)
    n, dim = a.n, a.dim
    basis = a.spins.astype(float)
    images = a.entries @ basis
    coef = basis.T @ images / dim
    fit_residual = float(np.max(np.abs(basis @ coef - images)))
    if fit_residual > closure_tol:
        raise ClosureViolation(f"A s_i leaves the linear span (residual {fit_residual:.3e})")
    restricted = coef.T

    i = np.arange(n)
    ab = np.column_stack([n * restricted[i, (i - 1) % n], n * restricted[i, (i + 1) % n]])
    jprev, j = np.roll(couplings.j, 1), couplings.j
    shift = np.maximum(jprev, j)
    s_prev, c_prev, _ = scaled_hyperbolics(jprev, shift)
    s_here, c_here, _ = scaled_hyperbolics(j, shift)
    expected = np.column_stack([s_prev, s_here]) / (c_prev + c_here)[:, None]
    coeff_residual = float(np.max(np.abs(ab - expected)))

    mu = spectrum(a)
    try:
        pair = spectral.solve(couplings)
        gap = float(pair.gap)
        lambda1 = 1.0 - gap
        x = np.array([float(v) for v in pair.left])
    except ZeroMatrix:
        gap, lambda1 = 1.0, 0.0
        x = np.full(n, 1.0 / np.sqrt(n))
    corollary = abs(float(mu[1]) - (1.0 - gap / n))
    # A acts on coefficient vectors through L^T, so the eigenfunction uses the left vector
    f = basis @ x
    eigen_residual = float(np.max(np.abs(a.entries @ f - mu[1] * f)))
    return OracleResult(
        mu=mu, restricted_l=restricted, coeffs_ab=ab,
        corollary_residual=corollary, linear_eigen_residual=eigen_residual,
        fit_residual=fit_residual, coeff_residual=coeff_residual, lambda1=lambda1,
    )
