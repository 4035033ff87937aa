"""Command-line front end.

Every run writes one JSON document (or one CSV table) carrying the inputs,
the tolerances used and the results. Failures are reported on stderr as a
JSON object and give a nonzero exit status.

CSV columns, per command:

* ``compute``: n, J, beta, precision, gap, lambda1, tau2, tau_star, log_tau2, iterations, residual, gradient
* ``sweep``: index, axis, value, gap, lambda1, tau2, tau_star, log_tau2, iterations, residual, precision
* ``verify``: check, passed, n_checks, worst_margin, tolerance, witness
* ``oracle``: site, a, b, a_formula, b_formula
* ``simulate``: seed, generator, observable, sweeps, mu2_hat, mu2_stderr, tau2_hat, stderr, tau2_exact, z, lags_used, n_batches
* ``asymptotics``: beta, ratio, deviation, C, D

List-valued cells (couplings, gradients) are joined with ``;``. Floats are
written with 17 significant digits; values outside the double range are
written as decimal strings from the extended-precision path.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import gmpy2
import numpy as np

from . import analysis, mcsim, oracle, spectral
from .cycle_model import new_couplings, scaled_hyperbolics
from .errors import CycleGlauberError, ZeroMatrix

SCHEMA_VERSION = 1
TOL_ENV = "CYCLEGLAUBER_TOL"
DEFAULT_COROLLARY_TOL = 1e-10
DEFAULT_RESTRICTION_TOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def default_tol() -> float:
    return float(os.environ.get(TOL_ENV, analysis.DEFAULT_MARGIN_TOL))


# -- value formatting ---------------------------------------------------------

def _num(v):
    """JSON-safe number: a float when it fits, else a 17-digit decimal string."""
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else str(v)
    f = float(v)
    if math.isfinite(f) and (f != 0 or v == 0):
        return f
    return _decimal(v)


def _decimal(v) -> str:
    mant, exp, _ = gmpy2.digits(v, 10, 17)
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-")
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+d}"


def _cell(v) -> str:
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


# -- argument handling --------------------------------------------------------

def _parse_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse coupling list {text!r}") from None


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise UsageError("grid must be start:stop:points[:lin|log]")
    try:
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None
    kind = parts[3] if len(parts) == 4 else "lin"
    if points < 1 or kind not in ("lin", "log"):
        raise UsageError(f"bad grid {text!r}")
    if kind == "log":
        if start <= 0 or stop <= 0:
            raise UsageError("log grid needs positive endpoints")
        return [float(v) for v in np.geomspace(start, stop, points)]
    return [float(v) for v in np.linspace(start, stop, points)]


def _base_couplings(args):
    if args.couplings is not None:
        values = _parse_list(args.couplings)
        if args.n is not None and args.n != len(values):
            raise UsageError(f"--n {args.n} does not match {len(values)} couplings")
        return values
    if args.uniform is not None:
        if args.n is None:
            raise UsageError("--uniform needs --n")
        return [args.uniform] * args.n
    raise UsageError("give --couplings or --uniform with --n")


def _resolve(args):
    base = new_couplings(_base_couplings(args))
    return base, (base.scaled(args.beta) if args.beta is not None else base)


def _inputs(args, base, cv) -> dict:
    out = {"J": base.tolist(), "n": base.n, "beta": args.beta, "precision": args.precision}
    if args.beta is not None:
        out["scaled_J"] = cv.tolist()
    return out


# -- commands -----------------------------------------------------------------

def _gradient(cv, res):
    if not cv.all_positive():
        return None
    if res.precision == "extended":
        from .extended import extended_gradient
        return [_num(g) for g in extended_gradient(cv, res)]
    return [float(g) for g in spectral.lambda_gradient(cv, res)]


def _summary(res) -> dict:
    if res.precision == "extended":
        with res.context():
            return {
                "gap": _num(res.gap), "lambda1": _num(res.lambda1), "tau2": _num(res.tau2),
                "tau_star": _num(res.tau_star), "log_tau2": res.log_tau2,
                "iterations": res.iterations, "residual": res.residual,
                "precision": "extended",
            }
    return {
        "gap": float(res.gap), "lambda1": float(res.lambda1), "tau2": float(res.tau2), "tau_star": float(res.tau_star),
        "log_tau2": res.log_tau2, "iterations": int(res.iterations),
        "residual": float(res.residual), "precision": "double",
    }


def cmd_compute(args):
    base, cv = _resolve(args)
    res = spectral.solve(cv, args.precision)
    row = {"n": cv.n, "J": cv.tolist(), "beta": args.beta}
    row.update(_summary(res))
    row["gradient"] = _gradient(cv, res)
    cols = ["n", "J", "beta", "precision", "gap", "lambda1", "tau2", "tau_star", "log_tau2",
            "iterations", "residual", "gradient"]
    return _inputs(args, base, cv), {}, row, [row], cols, True


def _sweep_point(job):
    index, axis, value, j, precision = job
    cv = new_couplings(j)
    row = {"index": index, "axis": axis, "value": value}
    row.update(_summary(spectral.solve(cv, precision)))
    return row


def cmd_sweep(args):
    base, cv = _resolve(args)
    grid = _parse_grid(args.grid)
    jobs = []
    for k, v in enumerate(grid):
        if args.axis == "beta":
            j = base.scaled(v)
        elif args.axis == "shift":
            j = cv.shifted(v)
        else:
            try:
                site = int(args.axis[1:])
            except ValueError:
                raise UsageError(f"unknown sweep axis {args.axis!r}") from None
            if not (args.axis[0] in "Jj" and 0 <= site < cv.n):
                raise UsageError(f"unknown sweep axis {args.axis!r}")
            vals = cv.j.copy()
            vals[site] = v
            j = new_couplings(vals)
        jobs.append((k, args.axis, v, j.tolist(), args.precision))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(job) for job in jobs]
    inputs = _inputs(args, base, cv)
    inputs.update({"axis": args.axis, "grid": grid})
    cols = ["index", "axis", "value", "gap", "lambda1", "tau2", "tau_star", "log_tau2",
            "iterations", "residual", "precision"]
    return inputs, {}, rows, rows, cols, True


def _report_row(r: analysis.InequalityReport) -> dict:
    return {"check": r.name, "passed": r.passed, "n_checks": r.n_checks,
            "worst_margin": r.worst_margin, "tolerance": r.tolerance, "witness": r.witness}


def _oracle_rows(cv, cap, tol_cor, tol_res):
    res = oracle.linear_restriction(cv, cap=cap)
    n = cv.n
    try:
        dense_m = spectral.build_m(cv).to_dense()
    except ZeroMatrix:
        dense_m = np.zeros((n, n))
    expected = (1 - 1 / n) * np.eye(n) + dense_m / n
    restriction = float(np.max(np.abs(res.restricted_l - expected)))
    return res, [
        {"check": "corollary", "passed": res.corollary_residual <= tol_cor, "n_checks": 1,
         "worst_margin": tol_cor - res.corollary_residual, "tolerance": tol_cor,
         "witness": f"residual={res.corollary_residual!r}"},
        {"check": "restriction", "passed": restriction <= tol_res, "n_checks": n * n,
         "worst_margin": tol_res - restriction, "tolerance": tol_res,
         "witness": f"residual={restriction!r}"},
        {"check": "linear_eigenfunction", "passed": res.linear_eigen_residual <= tol_cor,
         "n_checks": 1 << n, "worst_margin": tol_cor - res.linear_eigen_residual,
         "tolerance": tol_cor, "witness": f"residual={res.linear_eigen_residual!r}"},
    ]


def cmd_verify(args):
    base, cv = _resolve(args)
    tol = args.tol
    t_grid = [float(t) for t in _parse_list(args.t_grid)]
    rows = [
        _report_row(analysis.check_ratio_bounds(cv, args.precision, tol)),
        _report_row(analysis.check_ratio_sum(cv, args.precision, tol)),
    ]
    worst = None
    for site in range(cv.n):
        d = analysis.monotonicity_probe(cv, site, args.delta, args.precision)
        if worst is None or d < worst[0]:
            worst = (d, site)
    rows.append({"check": "monotonicity", "passed": bool(worst[0] > 0), "n_checks": cv.n,
                 "worst_margin": _num(worst[0]), "tolerance": 0.0,
                 "witness": f"site {worst[1]}, delta={args.delta!r}"})
    rows.append(_report_row(analysis.check_flow_inequality(cv, t_grid, args.precision, tol)))
    rows.append(_report_row(analysis.check_shift_inequality(cv, t_grid, args.precision, tol)))
    cap = args.cap
    if cv.n <= cap:
        rows.extend(_oracle_rows(cv, cap, args.corollary_tol, DEFAULT_RESTRICTION_TOL)[1])
    ok = all(r["passed"] for r in rows)
    inputs = _inputs(args, base, cv)
    inputs.update({"t_grid": t_grid, "delta": args.delta, "oracle_cap": cap})
    tols = {"margin": tol, "corollary": args.corollary_tol, "restriction": DEFAULT_RESTRICTION_TOL}
    results = {"passed": ok, "checks": rows}
    cols = ["check", "passed", "n_checks", "worst_margin", "tolerance", "witness"]
    return inputs, tols, results, rows, cols, ok


def cmd_oracle(args):
    base, cv = _resolve(args)
    res, checks = _oracle_rows(cv, args.cap, args.corollary_tol, DEFAULT_RESTRICTION_TOL)
    n = cv.n
    shift = np.maximum(np.roll(cv.j, 1), cv.j)
    sp, cp, _ = scaled_hyperbolics(np.roll(cv.j, 1), shift)
    sh, ch, _ = scaled_hyperbolics(cv.j, shift)
    table = [{"site": i, "a": float(res.coeffs_ab[i, 0]), "b": float(res.coeffs_ab[i, 1]),
              "a_formula": float(sp[i] / (cp[i] + ch[i])), "b_formula": float(sh[i] / (cp[i] + ch[i]))}
             for i in range(n)]
    head = [float(v) for v in res.mu[: args.head]]
    ok = all(c["passed"] for c in checks)
    results = {
        "mu_head": head, "mu2": res.mu2, "lambda1": res.lambda1,
        "corollary_residual": res.corollary_residual, "coeff_residual": res.coeff_residual,
        "fit_residual": res.fit_residual, "linear_eigen_residual": res.linear_eigen_residual,
        "ab": table, "checks": checks, "passed": ok,
    }
    tols = {"corollary": args.corollary_tol, "restriction": DEFAULT_RESTRICTION_TOL}
    return _inputs(args, base, cv), tols, results, table, ["site", "a", "b", "a_formula", "b_formula"], ok


def cmd_simulate(args):
    base, cv = _resolve(args)
    exact = spectral.solve(cv) if cv.max_j > 0 else None
    est = mcsim.estimate_relaxation(cv, args.sweeps, args.burn_in, args.seed,
                                    observable=args.observable, exact=exact)
    tau_exact = float(exact.tau2) if exact is not None else 1.0
    row = est.as_dict()
    row.update({"sweeps": args.sweeps, "tau2_exact": tau_exact,
                "z": (est.tau2_hat - tau_exact) / est.stderr})
    inputs = _inputs(args, base, cv)
    inputs.update({"sweeps": args.sweeps, "burn_in": args.burn_in, "observable": args.observable})
    cols = ["seed", "generator", "observable", "sweeps", "mu2_hat", "mu2_stderr", "tau2_hat",
            "stderr", "tau2_exact", "z", "lags_used", "n_batches"]
    return inputs, {}, row, [row], cols, True


def cmd_asymptotics(args):
    base, cv = _resolve(args)
    if args.beta is not None:
        raise UsageError("asymptotics scales by --beta-grid; do not pass --beta")
    betas = _parse_grid(args.beta_grid)
    rep = analysis.asymptotic_report(base, betas, args.precision)
    rows = [{"beta": b, "ratio": r, "deviation": _num(d), "C": rep.constants.c_rate,
             "D": rep.constants.d_prefactor} for b, r, d in zip(rep.betas, rep.ratios, rep.deviations)]
    final_ok = rep.final_within(args.rel)
    ok = final_ok and rep.monotone
    results = {
        "C": rep.constants.c_rate, "D": rep.constants.d_prefactor,
        "max_count": rep.constants.max_count, "min_count": rep.constants.min_count,
        "rows": rows, "final_within": final_ok, "monotone": rep.monotone,
        "near_degenerate": rep.near_degenerate, "notes": rep.notes, "passed": ok,
    }
    inputs = _inputs(args, base, cv)
    inputs["beta_grid"] = betas
    return inputs, {"relative": args.rel}, results, rows, ["beta", "ratio", "deviation", "C", "D"], ok


COMMANDS = {
    "compute": cmd_compute,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "asymptotics": cmd_asymptotics,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("couplings")
    g.add_argument("--couplings", help="comma-separated J_0,...,J_{n-1}")
    g.add_argument("--uniform", type=float, help="uniform coupling value (needs --n)")
    g.add_argument("--n", type=int, help="cycle length")
    g.add_argument("--beta", type=float, help="multiply every coupling by beta")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=("json", "csv"), default="json")
    o.add_argument("--output", help="output path (default stdout)")
    o.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    common.add_argument("--precision", choices=("auto", "double", "extended"), default="auto")
    common.add_argument("--tol", type=float, default=None,
                        help=f"margin tolerance (default ${TOL_ENV} or 1e-12)")

    ap = _Parser(prog="cycleglauber", description="Relaxation time of heat-bath dynamics on the Ising cycle.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("compute", parents=[common], help="eigenpair, relaxation times, gradient")

    p = sub.add_parser("sweep", parents=[common], help="one row per grid point")
    p.add_argument("--axis", default="beta", help="beta, shift, or J<i> for a single coupling")
    p.add_argument("--grid", required=True, help="start:stop:points[:lin|log]")
    p.add_argument("--jobs", type=int, default=1)

    for name, helptext in (("verify", "inequality suites and oracle cross-checks"),
                           ("oracle", "dense 2**n comparison")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--cap", type=int, default=oracle.default_cap(),
                       help=f"largest n for the dense oracle (default ${oracle.CAP_ENV} or 12)")
        p.add_argument("--corollary-tol", type=float, default=DEFAULT_COROLLARY_TOL)
        if name == "verify":
            p.add_argument("--t-grid", default="0,0.5,1,2,3")
            p.add_argument("--delta", type=float, default=1e-3)
        else:
            p.add_argument("--head", type=int, default=8, help="number of leading eigenvalues")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of tau2")
    p.add_argument("--sweeps", type=int, default=10 ** 6)
    p.add_argument("--burn-in", type=int, default=None, help="sweeps (default 50 tau2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observable", choices=("eigenfunction", "magnetization"), default="eigenfunction")

    p = sub.add_parser("asymptotics", parents=[common], help="tau2(beta J) / (D exp(C beta))")
    p.add_argument("--beta-grid", default="5:40:8", help="start:stop:points[:lin|log]")
    p.add_argument("--rel", type=float, default=0.05, help="relative band for the final ratio")
    return ap


def _render(args, doc, rows, cols) -> str:
    if args.format == "json":
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.tol is None:
            args.tol = default_tol()
        inputs, tols, results, rows, cols, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    except CycleGlauberError as exc:
        return _fail(type(exc).__name__, str(exc), 3)
    tolerances = {"margin": args.tol}
    tolerances.update(tols)
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "inputs": inputs,
           "results": results, "tolerances": tolerances}
    if args.command == "simulate":
        doc["seed"] = args.seed
    if not args.no_timestamp:
        doc["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = _render(args, doc, rows, cols)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
