"""Extended-precision Perron pair for strongly coupled cycles.

At low temperature ``1 - lambda1`` behaves like ``exp(-2 (J_max + J_min))``
and the eigenvector entries agree to about ``exp(-2 J)``, far past what
doubles can resolve or even represent. This module redoes the eigenproblem
in ``gmpy2.mpfr`` arithmetic, whose exponent range is effectively unbounded,
with a working precision that grows with the couplings.

The pair is found by shifted inverse iteration on the symmetric pencil
``K x = g Q x`` with ``Q = diag(cosh 2J_{i-1} + cosh 2J_i)``, ``K = Q - Sigma``
and ``Sigma`` the symmetric cyclic matrix of ``sinh 2J_i``. The smallest
pencil eigenvalue ``g`` is ``1 - lambda1``. Each iterate ``y > 0`` yields
Collatz-Wielandt bounds ``min_i (K y)_i / (q_i y_i) <= g <= max_i (...)``;
the lower bound sets the shift, which therefore never passes ``g`` and keeps
``K - sigma Q`` positive definite while the iteration converges
quadratically.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .cycle_model import CouplingVector
from .errors import NoConvergence, NotDifferentiableHere, NumericalFailure

__all__ = [
    "ExtendedResult",
    "default_dps",
    "precision",
    "extended_pair",
    "extended_gradient",
    "extended_log_tau2_gradient",
]

_LN10 = math.log(10.0)


def default_dps(couplings: CouplingVector, extra: int = 0) -> int:
    """Decimal digits needed for ``couplings``.

    Budget: ``4 J_max`` nats are lost forming ``K`` near singularity,
    ``2 J_max`` more resolving eigenvector differences and up to
    ``2 J_max`` in the gradient numerator, plus 40 spare digits.
    """
    return 40 + int(math.ceil(8.0 * couplings.max_j / _LN10)) + extra


def _bits(dps: int) -> int:
    return int(math.ceil(dps * _LN10 / math.log(2.0))) + 8


@contextmanager
def precision(dps: int):
    """Context manager setting the gmpy2 working precision to ``dps`` digits."""
    with gmpy2.context(gmpy2.get_context(), precision=_bits(dps)):
        yield


@dataclass(frozen=True, eq=False)
class ExtendedResult:
    """Perron pair in ``mpfr`` arithmetic.

    Arithmetic on the fields has to run inside :meth:`context`, otherwise
    gmpy2 silently rounds to 53 bits.
    """

    dps: int
    gap: mpfr
    x: tuple
    s: tuple
    c: tuple
    e: tuple
    iterations: int
    gap_low: mpfr
    gap_high: mpfr

    precision = "extended"

    def context(self):
        return precision(self.dps)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def lambda1(self):
        with self.context():
            return 1 - self.gap

    @property
    def tau2(self):
        with self.context():
            return 1 / self.gap

    @property
    def tau_star(self):
        with self.context():
            return (1 - self.gap) / self.gap

    @property
    def log_tau2(self) -> float:
        with self.context():
            return float(-gmpy2.log(self.gap))

    @property
    def log_tau_star(self) -> float:
        with self.context():
            return float(gmpy2.log1p(-self.gap) - gmpy2.log(self.gap))

    @property
    def left(self) -> tuple:
        """Left Perron vector ``q_i x_i``, unit norm."""
        n = self.n
        with self.context():
            w = [(self.c[i - 1] + self.c[i]) * self.x[i] for i in range(n)]
            norm = gmpy2.sqrt(gmpy2.fsum([v * v for v in w]))
            return tuple(v / norm for v in w)

    @property
    def residual(self) -> float:
        """Relative width of the Collatz-Wielandt bracket on the gap."""
        with self.context():
            return float(abs(self.gap_high - self.gap_low) / self.gap_high)


def _solve_cyclic(d, off, r):
    """Solve the symmetric cyclic tridiagonal system with diagonal ``d``.

    ``off[i]`` couples rows ``i`` and ``i+1 (mod n)``. The corner is removed
    by a Sherman-Morrison correction; with ``gamma = -d[0]`` the modified
    tridiagonal part is positive definite whenever the full matrix is.
    """
    n = len(d)
    gamma = -d[0]
    corner = off[n - 1]
    dd = list(d)
    dd[0] = d[0] - gamma
    dd[n - 1] = d[n - 1] - corner * corner / gamma

    def thomas(rhs):
        cp = [None] * n
        xs = [None] * n
        cp[0] = off[0] / dd[0]
        xs[0] = rhs[0] / dd[0]
        for i in range(1, n):
            den = dd[i] - off[i - 1] * cp[i - 1]
            cp[i] = off[i] / den
            xs[i] = (rhs[i] - off[i - 1] * xs[i - 1]) / den
        for i in range(n - 2, -1, -1):
            xs[i] -= cp[i] * xs[i + 1]
        return xs

    y = thomas(r)
    u = [0] * n
    u[0] = gamma
    u[n - 1] = corner
    z = thomas(u)
    factor = (y[0] + corner * y[n - 1] / gamma) / (1 + z[0] + corner * z[n - 1] / gamma)
    return [y[i] - factor * z[i] for i in range(n)]


def _hyperbolics(couplings: CouplingVector):
    j = [mpfr(float(v)) for v in couplings.j]
    s = tuple(gmpy2.sinh(2 * v) for v in j)
    c = tuple(gmpy2.cosh(2 * v) for v in j)
    e = tuple(gmpy2.exp(-2 * v) for v in j)
    return s, c, e


def _gap_identity(x, s, c, e):
    n = len(x)
    num = gmpy2.fsum([c[i] * (x[i] - x[(i + 1) % n]) ** 2 + 2 * x[i] * x[(i + 1) % n] * e[i]
                      for i in range(n)])
    den = gmpy2.fsum([(x[i] ** 2 + x[(i + 1) % n] ** 2) * c[i] for i in range(n)])
    return num / den


def extended_pair(couplings: CouplingVector, dps: int | None = None,
                  max_iter: int = 500) -> ExtendedResult:
    """Perron pair of ``M`` to roughly ``dps - 1.74 J_max`` significant digits.

    The gap is reported from the Rayleigh identity
    ``[sum c_i (x_i - x_{i+1})^2 + sum 2 x_i x_{i+1} (c_i - s_i)] / sum (x_i^2 + x_{i+1}^2) c_i``,
    which involves no subtraction of nearly equal quantities once ``x`` is
    accurate in its differences.

    Raises
    ------
    NoConvergence
        If the bracket has not closed after ``max_iter`` iterations.
    """
    if dps is None:
        dps = default_dps(couplings)
    n = couplings.n
    target = max(15, dps - int(math.ceil(4.0 * couplings.max_j / _LN10)) - 10)
    with precision(dps):
        s, c, e = _hyperbolics(couplings)
        q = [c[i - 1] + c[i] for i in range(n)]
        off = [-v for v in s]
        tol = mpfr(10) ** (-target)
        margin = mpfr(10) ** (-(target // 2))
        x = [1 / gmpy2.sqrt(n)] * n
        sigma = mpfr(0)
        low = high = mpfr(0)
        for it in range(1, max_iter + 1):
            y = _solve_cyclic([qi * (1 - sigma) for qi in q], off,
                              [q[i] * x[i] for i in range(n)])
            norm = gmpy2.sqrt(gmpy2.fsum([v * v for v in y]))
            if not gmpy2.is_finite(norm) or norm == 0:
                raise NumericalFailure("shifted solve broke down")
            y = [v / norm for v in y]
            if any(v <= 0 for v in y):
                if all(v < 0 for v in y):
                    y = [-v for v in y]
                else:
                    raise NumericalFailure("inverse iteration lost positivity")
            cw = [(q[i] * y[i] - s[i - 1] * y[i - 1] - s[i] * y[(i + 1) % n]) / (q[i] * y[i])
                  for i in range(n)]
            low = max(min(cw), mpfr(0))
            high = min(max(cw), _gap_identity(y, s, c, e))
            dx = max(abs(y[i] - x[i]) for i in range(n))
            x = y
            if high - low <= tol * high and dx <= tol:
                break
            # stay a relative margin below g: at sigma = g the pencil is singular
            sigma = max(min(2 * low - high, low * (1 - margin)), mpfr(0))
        else:
            raise NoConvergence(
                f"extended inverse iteration did not converge in {max_iter} steps",
                float((high - low) / high) if high else math.nan,
            )
        gap = _gap_identity(x, s, c, e)
    return ExtendedResult(dps=dps, gap=gap, x=tuple(x), s=s, c=c, e=e,
                          iterations=it, gap_low=low, gap_high=high)


def extended_gradient(couplings: CouplingVector, result: ExtendedResult | None = None) -> tuple:
    """``d lambda1 / d J_i`` as ``mpfr`` values (same closed form as the double path)."""
    if not couplings.all_positive():
        raise NotDifferentiableHere("gradient needs every coupling strictly positive")
    if result is None:
        result = extended_pair(couplings)
    x, s, c, e, g = result.x, result.s, result.c, result.e, result.gap
    n = len(x)
    with result.context():
        den = gmpy2.fsum([(x[i] ** 2 + x[(i + 1) % n] ** 2) * c[i] for i in range(n)])
        out = []
        for i in range(n):
            a, b = x[i], x[(i + 1) % n]
            num = 2 * e[i] * a * b - s[i] * (a - b) ** 2 + g * s[i] * (a * a + b * b)
            out.append(2 * num / den)
    return tuple(out)


def extended_log_tau2_gradient(couplings: CouplingVector, result: ExtendedResult | None = None) -> tuple:
    if result is None:
        result = extended_pair(couplings)
    grad = extended_gradient(couplings, result)
    with result.context():
        return tuple(v / result.gap for v in grad)
