"""Inequalities and low-temperature asymptotics for the cycle relaxation time.

Every check reports an :class:`InequalityReport` whose ``worst_margin`` is
``bound - value`` on the natural scale of the inequality, so a non-negative
margin means the inequality held. Margins are evaluated in the same
arithmetic as the eigenpair (double or extended, see :func:`spectral.solve`),
then rounded to a float for the report; ``n_negative`` and
``log10_abs_worst`` keep the sign and size of margins that underflow a double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import extended, spectral
from .cycle_model import CouplingVector, new_couplings
from .errors import InvalidInput, RequiresPositiveCouplings

__all__ = [
    "InequalityReport",
    "AsymptoticConstants",
    "AsymptoticReport",
    "check_ratio_bounds",
    "check_ratio_sum",
    "monotonicity_probe",
    "coupling_flow",
    "check_flow_inequality",
    "check_shift_inequality",
    "asymptotic_constants",
    "asymptotic_log_ratio",
    "asymptotic_ratio",
    "asymptotic_deviation",
    "asymptotic_report",
    "log_tau2_lower_bound",
    "DEFAULT_MARGIN_TOL",
]

DEFAULT_MARGIN_TOL = 1e-12
EQUALITY_TOL = 1e-12


@dataclass(frozen=True)
class InequalityReport:
    name: str
    n_checks: int
    worst_margin: float
    witness: str
    tolerance: float = DEFAULT_MARGIN_TOL
    n_violations: int = 0
    precision: str = "double"
    n_negative: int = 0
    log10_abs_worst: float = math.nan

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.tolerance

    def merged(self, other: "InequalityReport") -> "InequalityReport":
        """Combine two reports of the same check, keeping the worse witness."""
        worst = self if self.worst_margin <= other.worst_margin else other
        return InequalityReport(
            name=self.name,
            n_checks=self.n_checks + other.n_checks,
            worst_margin=worst.worst_margin,
            witness=worst.witness,
            tolerance=max(self.tolerance, other.tolerance),
            n_violations=self.n_violations + other.n_violations,
            n_negative=self.n_negative + other.n_negative,
            log10_abs_worst=worst.log10_abs_worst,
            precision=self.precision if self.precision == other.precision else "mixed",
        )


@dataclass(frozen=True)
class AsymptoticConstants:
    c_rate: float
    d_prefactor: float
    max_count: int
    min_count: int


@dataclass(frozen=True)
class AsymptoticReport:
    constants: AsymptoticConstants
    betas: tuple
    ratios: tuple
    deviations: tuple
    near_degenerate: bool
    notes: list = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        d = self.deviations
        return all(d[k + 1] < d[k] for k in range(len(d) - 1))

    def final_within(self, rel: float) -> bool:
        return abs(self.ratios[-1] - 1.0) <= rel


class _Arith:
    """Scalar functions for whichever arithmetic a result lives in."""

    def __init__(self, result):
        self.extended = getattr(result, "precision", "double") == "extended"
        self.result = result

    def context(self):
        if self.extended:
            return self.result.context()
        return _null()

    def num(self, v):
        return mpfr(float(v)) if self.extended else float(v)

    def __getattr__(self, name):
        return getattr(gmpy2 if self.extended else math, name)


class _null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _log10_abs(v) -> float:
    # survives margins far below the double range
    if v == 0:
        return -math.inf
    if isinstance(v, float):
        return math.log10(abs(v))
    return float(gmpy2.log10(abs(v)))


def _require_positive(couplings: CouplingVector):
    if not couplings.all_positive():
        raise RequiresPositiveCouplings("the bound divides by sinh(2 J_i); all couplings must be > 0")


def _mode(couplings_list, precision):
    if precision not in ("auto", "double", "extended"):
        raise InvalidInput(f"unknown precision {precision!r}")
    if precision == "auto":
        if any(spectral.needs_extended(cv) for cv in couplings_list):
            return "extended", max(extended.default_dps(cv) for cv in couplings_list)
        return "double", None
    if precision == "extended":
        return "extended", max(extended.default_dps(cv) for cv in couplings_list)
    return "double", None


def _solve_all(couplings_list, precision):
    mode, dps = _mode(couplings_list, precision)
    out = []
    for cv in couplings_list:
        try:
            out.append(spectral.solve(cv, mode, dps=dps))
        except spectral.NoConvergence:
            if precision == "double":
                raise
            mode, dps = "extended", max(extended.default_dps(c) for c in couplings_list)
            return [spectral.solve(c, mode, dps=dps) for c in couplings_list]
    return out


def _ratio_margins(couplings, precision, kind, tol, result):
    _require_positive(couplings)
    (res,) = _solve_all([couplings], precision) if result is None else (result,)
    ar = _Arith(res)
    n = couplings.n
    margins = []
    with ar.context():
        x = [ar.num(v) if not ar.extended else v for v in res.x]
        for i in range(n):
            jj = ar.num(couplings.j[i])
            r = x[i] / x[(i + 1) % n]
            if kind == "bounds":
                # (c-1)/s = tanh(J) and (c+1)/s = coth(J)
                t = ar.tanh(jj)
                margins.append((r - t, f"edge {i} lower"))
                margins.append((1 / t - r, f"edge {i} upper"))
            else:
                margins.append((2 / ar.tanh(2 * jj) - (r + 1 / r), f"edge {i}"))
        worst_val, worst_where = min(margins, key=lambda m: m[0])
        violations = sum(1 for m, _ in margins if m < -tol)
        negative = sum(1 for m, _ in margins if m < 0)
        log_worst = _log10_abs(worst_val)
    name = "ratio_bounds" if kind == "bounds" else "ratio_sum"
    return InequalityReport(
        name=name, n_checks=len(margins), worst_margin=float(worst_val),
        witness=f"{worst_where}; J={couplings.tolist()}", tolerance=tol,
        n_violations=violations, precision=res.precision,
        n_negative=negative, log10_abs_worst=log_worst,
    )


def check_ratio_bounds(couplings: CouplingVector, precision: str = "auto",
                       tol: float = DEFAULT_MARGIN_TOL, result=None) -> InequalityReport:
    """``(c_i - 1)/s_i <= x_i / x_{i+1} <= (c_i + 1)/s_i`` at every edge.

    ``result`` may carry a precomputed eigenpair from :func:`spectral.solve`.
    """
    return _ratio_margins(couplings, precision, "bounds", tol, result)


def check_ratio_sum(couplings: CouplingVector, precision: str = "auto",
                    tol: float = DEFAULT_MARGIN_TOL, result=None) -> InequalityReport:
    """``x_i/x_{i+1} + x_{i+1}/x_i <= 2 c_i / s_i`` at every edge."""
    return _ratio_margins(couplings, precision, "sum", tol, result)


def monotonicity_probe(couplings: CouplingVector, site: int, delta: float,
                       precision: str = "auto"):
    """``tau2(J + delta e_site) - tau2(J)``; positive whenever ``delta > 0``.

    Returns a float, or an ``mpfr`` when the couplings need the extended path
    (the difference may then be far below double resolution relative to
    ``tau2`` itself, or ``tau2`` may not fit in a double at all).
    """
    _require_positive(couplings)
    if not 0 <= site < couplings.n:
        raise InvalidInput(f"site {site} outside [0, {couplings.n})")
    if not (delta >= 0 and math.isfinite(delta)):
        raise InvalidInput("delta must be a finite non-negative number")
    bumped = couplings.perturbed(site, delta)
    base, up = _solve_all([couplings, bumped], precision)
    ar = _Arith(base)
    with ar.context():
        return up.tau2 - base.tau2


def _log_asinh(ly):
    # log-domain input: returns asinh(exp(ly))
    if ly > 20.0:
        return ly + math.log1p(math.sqrt(1.0 + math.exp(-2.0 * ly)))
    return math.asinh(math.exp(ly))


def coupling_flow(couplings: CouplingVector, t: float) -> CouplingVector:
    """Solve ``J_i' = tanh(2 J_i)`` for time ``t``: ``J_i(t) = asinh(exp(2t) sinh(2 J_i)) / 2``.

    ``asinh`` is taken in logarithmic form for large arguments, so any
    ``t`` and ``J`` representable as doubles are fine. The exact solution
    satisfies ``J_i(t) <= J_i + t``; it is clipped there against rounding.
    """
    if not (t >= 0 and math.isfinite(t)):
        raise InvalidInput("flow time must be finite and non-negative")
    out = []
    for j in couplings.j:
        if j == 0:
            out.append(0.0)
            continue
        # log sinh(2j) = 2j + log(1 - exp(-4j)) - log 2
        ly = 2.0 * t + 2.0 * j + math.log(-math.expm1(-4.0 * j)) - math.log(2.0)
        out.append(min(0.5 * _log_asinh(ly), j + t))
    return new_couplings(out)


def _log_tau_star(res):
    ar = _Arith(res)
    with ar.context():
        g = res.gap
        return ar.log1p(-g) - ar.log(g)


def _growth_check(name, couplings, t_grid, transform, precision, tol):
    _require_positive(couplings)
    ts = [float(t) for t in t_grid]
    if any(not (t >= 0 and math.isfinite(t)) for t in ts):
        raise InvalidInput("t grid must be finite and non-negative")
    moved = [transform(couplings, t) for t in ts]
    results = _solve_all([couplings] + moved, precision)
    base = results[0]
    ar = _Arith(base)
    margins = []
    with ar.context():
        ref = _log_tau_star(base)
        for t, res in zip(ts, results[1:]):
            # tau*(moved) / (exp(2t) tau*(J)) - 1
            m = ar.expm1(_log_tau_star(res) - 2 * ar.num(t) - ref)
            margins.append((m, t))
        worst_val, worst_t = min(margins, key=lambda m: m[0])
        violations = sum(1 for m, _ in margins if m < -tol)
        negative = sum(1 for m, _ in margins if m < 0)
        log_worst = _log10_abs(worst_val)
    return InequalityReport(
        name=name, n_checks=len(ts), worst_margin=float(worst_val),
        witness=f"t={worst_t}; J={couplings.tolist()}", tolerance=tol,
        n_violations=violations, precision=base.precision,
        n_negative=negative, log10_abs_worst=log_worst,
    )


def check_flow_inequality(couplings: CouplingVector, t_grid: Sequence[float],
                          precision: str = "auto", tol: float = DEFAULT_MARGIN_TOL) -> InequalityReport:
    """``tau*(J(t)) >= exp(2t) tau*(J)`` along :func:`coupling_flow`.

    The margin is the relative excess ``tau*(J(t)) / (exp(2t) tau*(J)) - 1``.
    """
    return _growth_check("flow", couplings, t_grid, coupling_flow, precision, tol)


def check_shift_inequality(couplings: CouplingVector, t_grid: Sequence[float],
                           precision: str = "auto", tol: float = DEFAULT_MARGIN_TOL) -> InequalityReport:
    """``tau*(J + t) >= exp(2t) tau*(J)`` with ``t`` added to every coupling."""
    return _growth_check("shift", couplings, t_grid, lambda cv, t: cv.shifted(t), precision, tol)


def asymptotic_constants(couplings: CouplingVector, tol: float = EQUALITY_TOL) -> AsymptoticConstants:
    """``C = 2 (J_max + J_min)`` and ``D = #{J_i = J_max} / (2 #{J_i = J_min})``."""
    j = couplings.j
    jmax, jmin = float(j.max()), float(j.min())
    max_count = int(np.sum(np.abs(j - jmax) <= tol))
    min_count = int(np.sum(np.abs(j - jmin) <= tol))
    return AsymptoticConstants(
        c_rate=2.0 * (jmax + jmin),
        d_prefactor=0.5 * max_count / min_count,
        max_count=max_count,
        min_count=min_count,
    )


def asymptotic_log_ratio(couplings: CouplingVector, beta: float, precision: str = "auto"):
    """``log tau2(beta J) - log D - C beta`` in the working arithmetic.

    ``C beta`` is formed from the scaled couplings actually used, so rounding
    in ``beta * J`` does not leak into the ratio.
    """
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidInput("beta must be positive and finite")
    consts = asymptotic_constants(couplings)
    scaled = couplings.scaled(beta)
    (res,) = _solve_all([scaled], precision)
    ar = _Arith(res)
    with ar.context():
        c_beta = 2 * (ar.num(scaled.max_j) + ar.num(scaled.min_j))
        return -ar.log(res.gap) - ar.log(ar.num(consts.d_prefactor)) - c_beta


def asymptotic_ratio(couplings: CouplingVector, beta: float, precision: str = "auto") -> float:
    """``tau2(beta J) / (D exp(C beta))``, tending to 1 as ``beta`` grows."""
    return float(math.exp(float(asymptotic_log_ratio(couplings, beta, precision))))


def asymptotic_deviation(couplings: CouplingVector, beta: float, precision: str = "auto"):
    """``|ratio - 1|`` without rounding it to double first."""
    lr = asymptotic_log_ratio(couplings, beta, precision)
    if isinstance(lr, float):
        return abs(math.expm1(lr))
    return abs(gmpy2.expm1(lr))


def asymptotic_report(couplings: CouplingVector, betas: Sequence[float],
                      precision: str = "auto") -> AsymptoticReport:
    _require_positive(couplings)
    consts = asymptotic_constants(couplings)
    betas = tuple(float(b) for b in betas)
    ratios, devs = [], []
    for b in betas:
        lr = asymptotic_log_ratio(couplings, b, precision)
        ratios.append(float(math.exp(float(lr))))
        devs.append(abs(math.expm1(lr)) if isinstance(lr, float) else abs(gmpy2.expm1(lr)))
    j = couplings.j
    width = 1.0 / max(betas)
    near = bool(np.any(((np.abs(j - j.max()) > EQUALITY_TOL) & (np.abs(j - j.max()) < width))
                       | ((np.abs(j - j.min()) > EQUALITY_TOL) & (np.abs(j - j.min()) < width))))
    notes = ["couplings within 1/beta of an extreme: slow convergence expected"] if near else []
    return AsymptoticReport(consts, betas, tuple(ratios), tuple(devs), near, notes)


def log_tau2_lower_bound(couplings: CouplingVector) -> float:
    """``log(sum c_i / sum (c_i - s_i))``, a lower bound on ``log tau2``."""
    j = couplings.j
    log_c = np.logaddexp(2 * j, -2 * j) - math.log(2.0)
    return float(np.logaddexp.reduce(log_c) - np.logaddexp.reduce(-2 * j))
