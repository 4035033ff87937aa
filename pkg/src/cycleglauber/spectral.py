"""Reduced n x n eigenproblem for heat-bath dynamics on the cycle.

On the cycle the chain maps linear functions ``sum_i q_i s_i`` to linear
functions, and the restricted operator is ``(1 - 1/n) I + M / n`` with ``M``
cyclic tridiagonal and zero on the diagonal:

    M[i, i-1] = sinh(2 J_{i-1}) / (cosh(2 J_{i-1}) + cosh(2 J_i))
    M[i, i+1] = sinh(2 J_i)     / (cosh(2 J_{i-1}) + cosh(2 J_i))

The Perron eigenvalue ``lambda1`` of ``M`` gives the relaxation time
``tau2 = 1 / (1 - lambda1)``.

Everything here is double precision. Couplings large enough that
``1 - lambda1`` falls below ~1e-8 are handled by :mod:`cycleglauber.extended`;
:func:`solve` picks the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cycle_model import CouplingVector, scaled_hyperbolics
from .errors import (
    DimensionMismatch,
    InvalidInput,
    NoConvergence,
    NotDifferentiableHere,
    NumericalFailure,
    ZeroMatrix,
)

__all__ = [
    "CyclicTridiagonal",
    "SpectralResult",
    "build_m",
    "dominant_pair",
    "rayleigh",
    "lambda_gradient",
    "log_tau2_gradient",
    "gap_upper_bound",
    "solve",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 10**6

# below this estimated spectral gap the double path loses too many digits
EXTENDED_GAP_THRESHOLD = 1e-8
EXTENDED_COUPLING_THRESHOLD = 20.0


@dataclass(frozen=True, eq=False)
class CyclicTridiagonal:
    """The reduced matrix ``M`` stored by its two cyclic off-diagonals.

    ``sub[i] = M[i, i-1]`` and ``sup[i] = M[i, i+1]``, indices mod n.
    ``log_weights[i] = log(cosh 2J_{i-1} + cosh 2J_i)`` are the reversibility
    weights ``q`` with ``q[i] M[i, i+1] = q[i+1] M[i+1, i]``; ``defect[i]`` is
    ``1 - sub[i] - sup[i]`` evaluated without cancellation.
    """

    n: int
    sub: np.ndarray
    sup: np.ndarray
    log_weights: np.ndarray
    defect: np.ndarray

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        return self.sub * np.roll(x, 1) + self.sup * np.roll(x, -1)

    def to_dense(self) -> np.ndarray:
        n = self.n
        m = np.zeros((n, n))
        i = np.arange(n)
        m[i, (i - 1) % n] += self.sub
        m[i, (i + 1) % n] += self.sup
        return m

    def symmetrized_offdiag(self) -> np.ndarray:
        """``t[i] = S[i, i+1]`` for ``S = D^{1/2} M D^{-1/2}``, ``D = diag(q)``."""
        return np.sqrt(self.sup * np.roll(self.sub, -1))

    def reversibility_residual(self) -> float:
        """Max relative mismatch of ``q[i] M[i,i+1]`` against ``q[i+1] M[i+1,i]``."""
        lq = self.log_weights
        ref = lq.max()
        left = np.exp(lq - ref) * self.sup
        right = np.exp(np.roll(lq, -1) - ref) * np.roll(self.sub, -1)
        scale = np.maximum(np.abs(left), np.abs(right))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, np.abs(left - right) / scale, 0.0)
        return float(rel.max())


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Dominant eigenpair of ``M`` and derived relaxation times.

    ``gap = 1 - lambda1`` is computed from the cancellation-free Rayleigh
    identity rather than by subtraction, and ``lambda1`` is ``1 - gap``.

    ``x`` solves ``M x = lambda1 x``. The chain's linear eigenfunction is
    ``sum_i left_i s_i`` with ``left`` the left Perron vector, ``left_i`` proportional to
    ``q_i x_i``; the two coincide only for uniform couplings.
    """

    lambda1: float
    x: np.ndarray
    tau2: float
    tau_star: float
    iterations: int
    residual: float
    gap: float
    left: np.ndarray

    @property
    def log_tau2(self) -> float:
        return -math.log(self.gap)

    @property
    def log_tau_star(self) -> float:
        return math.log1p(-self.gap) - math.log(self.gap)

    precision = "double"


def build_m(couplings: CouplingVector) -> CyclicTridiagonal:
    """Assemble ``M`` with every entry scaled by ``exp(-2 max(J_{i-1}, J_i))``.

    The scaling cancels inside each ratio, so entries stay exact to rounding
    even when ``cosh(2J)`` itself would overflow.
    """
    j = couplings.j
    if not np.any(j > 0):
        raise ZeroMatrix("all couplings are zero; M vanishes and lambda1 = 0")
    jprev = np.roll(j, 1)
    shift = np.maximum(jprev, j)
    s_prev, c_prev, e_prev = scaled_hyperbolics(jprev, shift)
    s_here, c_here, e_here = scaled_hyperbolics(j, shift)
    q = c_prev + c_here
    return CyclicTridiagonal(
        n=couplings.n,
        sub=s_prev / q,
        sup=s_here / q,
        log_weights=2 * shift + np.log(q),
        defect=(e_prev + e_here) / q,
    )


def _gap_identity(m: CyclicTridiagonal, x: np.ndarray) -> float:
    # x^T Q (I - M) x = sum_i q_i M[i,i+1] (x_i - x_{i+1})^2 + sum_i q_i defect_i x_i^2
    w = np.exp(m.log_weights - m.log_weights.max())
    num = np.sum(w * m.sup * (x - np.roll(x, -1)) ** 2) + np.sum(w * m.defect * x**2)
    den = np.sum(w * x**2)
    return float(num / den)


def dominant_pair(m: CyclicTridiagonal, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> SpectralResult:
    """Perron eigenpair of ``M`` by power iteration on ``I + S``.

    ``S = D^{1/2} M D^{-1/2}`` is symmetric with the spectrum of ``M``, which
    lies in ``[-lambda1, lambda1]``; the unit shift makes ``1 + lambda1``
    strictly dominant even when the spectrum is symmetric about zero.

    The iterate after ``k`` rounds is ``(I + S)^(2^k - 1)`` applied to the
    all-ones start, obtained by repeated squaring, so ``iterations`` counts
    equivalent single power steps. Stops when the eigenvalue changes by less
    than ``tol`` and ``||M x - lambda x||_inf < tol * max(1, lambda)``.

    Raises
    ------
    NoConvergence
        If ``max_iter`` equivalent steps pass without meeting the test.
    """
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    n = m.n
    root_d = np.exp(0.5 * (m.log_weights - m.log_weights.max()))
    t = m.symmetrized_offdiag()
    sym = np.zeros((n, n))
    i = np.arange(n)
    sym[i, (i + 1) % n] += t
    sym[(i + 1) % n, i] += t
    power = np.eye(n) + sym

    v = root_d / np.linalg.norm(root_d)
    lam_old = math.nan
    iterations = 0
    stride = 1
    residual = math.inf
    while True:
        v = power @ v
        v /= np.linalg.norm(v)
        iterations += stride
        lam = float(v @ sym @ v)
        x = v / root_d
        x /= np.linalg.norm(x)
        residual = float(np.max(np.abs(m.matvec(x) - lam * x)))
        if abs(lam - lam_old) < tol and residual < tol * max(1.0, lam):
            break
        if iterations >= max_iter:
            raise NoConvergence(
                f"power iteration did not converge in {max_iter} steps", residual
            )
        lam_old = lam
        power = power @ power
        power /= np.abs(power).max()
        stride *= 2

    if x.sum() < 0:
        x = -x
    if np.any(x < -1e-12):
        raise NumericalFailure("dominant eigenvector has mixed signs")
    x = np.abs(x)
    if np.any(x == 0):
        raise NumericalFailure("dominant eigenvector has a zero entry")
    x.setflags(write=False)
    left = x * np.exp(m.log_weights - m.log_weights.max())
    left /= np.linalg.norm(left)
    left.setflags(write=False)

    gap = _gap_identity(m, x)
    return SpectralResult(
        lambda1=1.0 - gap,
        x=x,
        tau2=1.0 / gap,
        tau_star=(1.0 - gap) / gap,
        iterations=iterations,
        residual=residual,
        gap=gap,
        left=left,
    )


def rayleigh(y, couplings: CouplingVector) -> float:
    """``sum 2 y_i y_{i+1} s_i / sum (y_i^2 + y_{i+1}^2) c_i``.

    Its supremum over ``y`` is ``lambda1``, attained at the Perron vector.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (couplings.n,):
        raise DimensionMismatch(f"expected {couplings.n} entries, got shape {y.shape}")
    if not np.any(y != 0):
        raise InvalidInput("rayleigh quotient of the zero vector")
    s, c, _ = scaled_hyperbolics(couplings.j, couplings.max_j)
    y1 = np.roll(y, -1)
    den = np.sum((y**2 + y1**2) * c)
    if den <= 0:
        raise InvalidInput("rayleigh denominator vanishes")
    return float(np.sum(2 * y * y1 * s) / den)


def _require_positive(couplings: CouplingVector):
    if not couplings.all_positive():
        raise NotDifferentiableHere("gradient needs every coupling strictly positive")


def lambda_gradient(couplings: CouplingVector, result: SpectralResult | None = None) -> np.ndarray:
    """Closed-form ``d lambda1 / d J_i`` for every edge.

    Because the Rayleigh quotient is stationary at ``x``, only its explicit
    ``J`` dependence contributes::

        2 (2 x_i x_{i+1} c_i - (x_i^2 + x_{i+1}^2) s_i lambda1) / sum_k (x_k^2 + x_{k+1}^2) c_k

    evaluated as ``2 e_i x_i x_{i+1} - s_i (x_i - x_{i+1})^2 + gap s_i (x_i^2 + x_{i+1}^2)``
    in the numerator (``e = cosh - sinh``), which is the same quantity with
    most of the cancellation removed.
    """
    _require_positive(couplings)
    if result is None:
        result = dominant_pair(build_m(couplings))
    x = np.asarray(result.x)
    x1 = np.roll(x, -1)
    s, c, e = scaled_hyperbolics(couplings.j, couplings.max_j)
    sq = x**2 + x1**2
    num = 2 * e * x * x1 - s * (x - x1) ** 2 + result.gap * s * sq
    return 2 * num / np.sum(sq * c)


def log_tau2_gradient(couplings: CouplingVector, result: SpectralResult | None = None) -> np.ndarray:
    """``d log tau2 / d J_i = (d lambda1 / d J_i) / (1 - lambda1)``."""
    if result is None:
        result = dominant_pair(build_m(couplings))
    return lambda_gradient(couplings, result) / result.gap


def gap_upper_bound(couplings: CouplingVector) -> float:
    """``sum e_i / sum c_i`` from the Rayleigh quotient at the all-ones vector."""
    _, c, e = scaled_hyperbolics(couplings.j, couplings.max_j)
    return float(np.sum(e) / np.sum(c))


def needs_extended(couplings: CouplingVector) -> bool:
    return (couplings.max_j > EXTENDED_COUPLING_THRESHOLD
            or gap_upper_bound(couplings) < EXTENDED_GAP_THRESHOLD)


def solve(couplings: CouplingVector, precision: str = "auto", dps: int | None = None):
    """Dominant eigenpair in whichever arithmetic the couplings require.

    ``precision`` is ``"double"``, ``"extended"`` or ``"auto"``. Returns a
    :class:`SpectralResult` or an :class:`~cycleglauber.extended.ExtendedResult`;
    both expose ``gap``, ``lambda1``, ``x``, ``tau2``, ``tau_star`` and
    ``log_tau2``.
    """
    from . import extended

    if precision not in ("auto", "double", "extended"):
        raise InvalidInput(f"unknown precision {precision!r}")
    if precision == "extended" or (precision == "auto" and needs_extended(couplings)):
        return extended.extended_pair(couplings, dps=dps)
    try:
        return dominant_pair(build_m(couplings))
    except NoConvergence:
        if precision == "double":
            raise
        return extended.extended_pair(couplings, dps=dps)
