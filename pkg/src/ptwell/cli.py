"""``ptwell`` command-line front end.

Every command writes one document: JSON (manifest + nested result) or CSV
(a ``# manifest`` comment line, then a header and rows).  Output goes to
``--out-dir`` (default ``$PTWELL_OUT_DIR``) as ``<command>.<ext>`` or to
stdout when neither is set.  Exit status is 0 when every tolerance check
passed, 1 when a check failed and 2 on an error, which is reported as a
JSON record on stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import __version__
from .model import make_config

RESIDUAL_TOL = 1e-9
JUMP_TOL = 1e-9
QH_TOL = 1e-8
GRAM_TOL = 1e-9


# ---------------------------------------------------------------- parsing

def decimal_arg(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not value.is_finite():
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def sweep_arg(text: str) -> tuple[Decimal, Decimal, Decimal]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("sweep must look like lo:hi:step")
    lo, hi, step = (decimal_arg(p) for p in parts)
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("sweep needs lo <= hi and step > 0")
    return lo, hi, step


def sweep_points(sweep) -> list[Decimal]:
    lo, hi, step = sweep
    count = int((hi - lo) / step) + 1
    return [lo + i * step for i in range(count)]


def int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def float_list(text: str) -> list[float]:
    return [float(decimal_arg(t.strip())) for t in text.split(",") if t.strip()]


# ---------------------------------------------------------------- output

def cnum(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return cnum(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Decimal):
        return str(obj)
    return obj


@dataclass
class Outcome:
    result: dict
    columns: list[str]
    rows: list[list]
    ok: bool = True
    tolerances: dict = field(default_factory=dict)


def manifest(command: str, params: dict, tolerances: dict) -> dict:
    return {
        "command": command,
        "params": jsonable(params),
        "version": __version__,
        "tolerances": tolerances,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _cell(v):
    if isinstance(v, complex):
        return repr(v.real) + ("+" if v.imag >= 0 else "-") + repr(abs(v.imag)) + "j"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(fmt: str, man: dict, outcome: Outcome) -> str:
    if fmt == "json":
        doc = {"manifest": man, "ok": outcome.ok, "result": jsonable(outcome.result)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# manifest " + json.dumps(man, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(outcome.columns)
    for row in outcome.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit(text: str, command: str, fmt: str, out_dir: str | None) -> None:
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        target = path / f"{command}.{fmt}"
        target.write_text(text, encoding="utf-8")
        print(str(target))
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def _spectrum_point(args, strict: bool = False) -> dict:
    a, xi, n_max, allow_complex = args
    from .model import MergerError, ConvergenceError, DomainError
    from .secular import eval_secular_complex, find_spectrum
    cfg = make_config(a, xi)
    try:
        roots = find_spectrum(cfg, n_max, allow_complex=allow_complex)
    except (MergerError, ConvergenceError, DomainError) as exc:
        if strict:
            raise
        return {"xi": xi, "error": {"type": type(exc).__name__, "message": str(exc)}}
    levels = []
    for r in roots:
        res = abs(eval_secular_complex(cfg, r.kappa))
        levels.append({"n": r.n, "kappa": r.kappa, "energy": r.energy, "regime": r.regime,
                       "degenerate": r.degenerate, "secular_residual": res})
    return {"xi": xi, "levels": levels}


def cmd_spectrum(ns) -> Outcome:
    xis = sweep_points(ns.sweep_xi) if ns.sweep_xi else [ns.xi]
    jobs = [(float(ns.a), float(x), ns.n_max, ns.allow_complex) for x in xis]
    if ns.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.workers) as pool:
            points = list(pool.map(_spectrum_point, jobs))
    else:
        points = [_spectrum_point(j, strict=len(jobs) == 1) for j in jobs]
    rows, ok = [], True
    for p in points:
        if "error" in p:
            ok = False
            rows.append([p["xi"], "", "", "", "", "", "", p["error"]["type"]])
            continue
        for lv in p["levels"]:
            ok &= lv["secular_residual"] <= RESIDUAL_TOL * max(1.0, abs(lv["kappa"]))
            rows.append([p["xi"], lv["n"], lv["kappa"], lv["energy"], lv["regime"],
                         lv["degenerate"], lv["secular_residual"], ""])
    result = {"a": float(ns.a), "points": points,
              "merger": any(lv["degenerate"] for p in points for lv in p.get("levels", ()))}
    cols = ["xi", "n", "kappa", "energy", "regime", "degenerate", "secular_residual", "error"]
    return Outcome(result, cols, rows, ok, {"secular_residual": RESIDUAL_TOL})


def cmd_wavefunction(ns) -> Outcome:
    from .eigenstates import coefficients, eval_derivative, eval_wavefunction, matching_matrix
    from .model import DomainError
    from .secular import find_spectrum
    cfg = make_config(ns.a, ns.xi)
    if ns.n < 1:
        raise DomainError("n must be >= 1")
    root = find_spectrum(cfg, ns.n)[ns.n - 1]
    if ns.grid_points < 2:
        raise DomainError("grid-points must be >= 2")
    coeffs = coefficients(cfg, root)
    k = root.kappa.real
    xs = np.linspace(-1.0, 1.0, ns.grid_points)
    psi = np.asarray(eval_wavefunction(coeffs, k, cfg, xs), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(psi))) * k)
    jumps = []
    for x, sign in ((cfg.a, 1), (-cfg.a, -1)):
        d = eval_derivative(coeffs, k, cfg, x, side="right") - eval_derivative(coeffs, k, cfg, x, side="left")
        jumps.append(abs(d - sign * 1j * cfg.xi * eval_wavefunction(coeffs, k, cfg, x)) / scale)
    boundary = max(abs(psi[0]), abs(psi[-1]))
    match = matching_matrix(cfg, k).residual(coeffs)
    ok = max(jumps) <= JUMP_TOL and boundary <= JUMP_TOL and match <= JUMP_TOL
    result = {"a": cfg.a, "xi": cfg.xi, "n": root.n, "kappa": k,
              "coefficients": dict(zip(("alpha", "beta", "gamma", "delta"), coeffs.as_tuple())),
              "norm_convention": coeffs.norm_convention, "route": coeffs.route,
              "jump_residual": max(jumps), "boundary_residual": boundary,
              "matching_residual": match,
              "grid": [{"x": float(x), "psi": complex(p)} for x, p in zip(xs, psi)]}
    rows = [[float(x), float(p.real), float(p.imag)] for x, p in zip(xs, psi)]
    return Outcome(result, ["x", "re_psi", "im_psi"], rows, ok,
                   {"jump_residual": JUMP_TOL, "boundary": JUMP_TOL, "matching": JUMP_TOL})


def cmd_critical(ns) -> Outcome:
    from .criticality import (critical_coupling, critical_curve, exceptional_point_check,
                              merging_levels, solve_exceptional_half)
    tol = {"bisection": ns.tol}
    if ns.sweep_a:
        a_vals = [float(a) for a in sweep_points(ns.sweep_a)]
        curve = critical_curve(a_vals, ns.level_window, workers=ns.workers)
        rows = [[a, x] for a, x in zip(curve.a_values, curve.xi_crit)]
        result = {"a": curve.a_values, "xi_crit": curve.xi_crit, "jumps": curve.jumps,
                  "level_window": ns.level_window}
        return Outcome(result, ["a", "xi_crit"], rows, True, tol)
    a = float(ns.a)
    xi_c = critical_coupling(a, ns.level_window, tol=ns.tol)
    result = {"a": a, "xi_crit": xi_c, "level_window": ns.level_window,
              "merging_levels": merging_levels(a, xi_c + 1e-6, ns.level_window)}
    ok = True
    if a == 0.5:
        ep = solve_exceptional_half()
        d, dd = exceptional_point_check(ep)
        result["exceptional_point"] = {"nu0": ep.nu0, "mu0": ep.mu0, "xi_crit": ep.xi_crit,
                                       "level_pair": ep.level_pair, "secular": d,
                                       "secular_derivative": dd}
        ok = abs(ep.xi_crit - xi_c) <= 1e-7 and d <= 1e-10 and dd <= 1e-8
        tol["closed_form_agreement"] = 1e-7
    return Outcome(result, ["a", "xi_crit"], [[a, xi_c]], ok, tol)


def cmd_crossings(ns) -> Outcome:
    from .criticality import verify_crossing
    rows, reports = [], []
    for m in range(1, ns.m_max + 1):
        r = verify_crossing(m)
        reports.append({"m": r.m, "xi": r.xi, "kappa": r.kappa_target, "roots": r.roots,
                        "deviation": r.deviation, "below": r.below, "above": r.above,
                        "secular_at_target": r.secular_at_target, "ok": r.ok})
        rows.append([r.m, r.xi, r.kappa_target, r.roots[0], r.roots[1], r.deviation, r.ok])
    ok = all(r["ok"] for r in reports)
    return Outcome({"crossings": reports}, ["m", "xi", "kappa", "root_lo", "root_hi",
                                            "deviation", "ok"], rows, ok, {"deviation": 1e-10})


def _series_rows(series, extra=()):
    names = list(series.ring.variables)
    rows = [list(e) + [f"{c.numerator}/{c.denominator}"] + list(extra)
            for e, c in sorted(series.terms())]
    return names, rows


def cmd_series(ns) -> Outcome:
    from . import perturbation as pt
    order = ns.order
    tables, printed = {}, {}
    if ns.kind == "z":
        tables["z"] = pt.z_series(order)
        printed["z"] = pt.PRINTED_Z
    elif ns.kind == "tau":
        x, y = pt.tau_series(order)
        tables["x"], tables["y"] = x, y
        printed["x"], printed["y"] = pt.PRINTED_TAU_X, pt.printed_tau_y()
    elif ns.kind == "sc":
        s, c, t = pt.sc_expansions(order, ns.branch)
        tables.update({"sqrt2_S": s, "sqrt2_C": c, "S_over_C": t})
        if ns.branch == "x":
            printed.update({"sqrt2_S": pt.PRINTED_SQRT2_S, "sqrt2_C": pt.PRINTED_SQRT2_C,
                            "S_over_C": pt.PRINTED_S_OVER_C})
    elif ns.kind == "matrix":
        s, c = pt.lambda_mu_matrix_elements(order, ns.branch, ns.convention)
        tables.update({"sqrt2_S": s, "sqrt2_C": c})
        if ns.branch == "x":
            printed.update({"sqrt2_S": pt.PRINTED_MATRIX_S, "sqrt2_C": pt.PRINTED_MATRIX_C})
    else:
        tables["tan"] = pt.tan_kappa_series(order, ns.branch, ns.convention)
        if ns.branch == "x":
            printed["tan"] = pt.PRINTED_TAN
    result, rows, names = {}, [], None
    for name, series in tables.items():
        names, part = _series_rows(series, (name,))
        rows += part
        entry = {"variables": list(series.ring.variables),
                 "terms": [{"exponents": list(e), "coefficient": f"{c.numerator}/{c.denominator}"}
                           for e, c in sorted(series.terms())]}
        if name in printed:
            rep = pt.compare_coefficients(series, printed[name])
            entry["printed_comparison"] = {
                "checked": rep.checked, "exact": rep.exact,
                "mismatches": [[list(e), str(want), str(got)] for e, want, got in rep.mismatches]}
        result[name] = entry
    result["kind"], result["order"] = ns.kind, order
    if ns.kind in ("matrix", "tan"):
        result["convention"] = ns.convention
    return Outcome(result, names + ["coefficient", "series"], rows, True, {"arithmetic": "exact"})


def cmd_metric(ns) -> Outcome:
    from .metric import (build_biorthogonal, build_metric, identity_resolution_residual,
                         quasi_hermiticity_residual)
    cfg = make_config(ns.a, ns.xi)
    system = build_biorthogonal(cfg, ns.N)
    weights = np.array(ns.weights) if ns.weights else np.ones(ns.N)
    metric = build_metric(system, weights)
    qh = quasi_hermiticity_residual(metric, system)
    ident = identity_resolution_residual(system)
    ok = system.gram_tolerance <= GRAM_TOL and qh <= QH_TOL and ident <= GRAM_TOL
    result = {"a": cfg.a, "xi": cfg.xi, "N": ns.N, "weights": weights,
              "energies": system.energies, "parity_overlaps": system.parity_overlaps,
              "q_norms": system.q_norms, "signs_mixed": system.signs_mixed,
              "gram_residual": system.gram_tolerance,
              "positivity_margin": metric.smallest_eigenvalue,
              "quasi_hermiticity_residual": qh, "identity_resolution_residual": ident,
              "representation": metric.representation}
    rep = metric.representation
    rows = [[i + 1] + [complex(v) for v in rep[i]] for i in range(ns.N)]
    cols = ["row"] + [f"col{j + 1}" for j in range(ns.N)]
    return Outcome(result, cols, rows, ok,
                   {"gram": GRAM_TOL, "quasi_hermiticity": QH_TOL, "identity_resolution": GRAM_TOL})


def cmd_oracle(ns) -> Outcome:
    from .galerkin import extrapolated_levels, match_levels, oracle_spectrum
    from .model import ConvergenceError, MergerError
    from .secular import find_spectrum
    cfg = make_config(ns.a, ns.xi)
    if ns.richardson:
        ex = extrapolated_levels(cfg, ns.M, ns.k)
        values = ex.extrapolated
        extra = {"raw_M": ex.raw_coarse, "raw_2M": ex.raw_fine}
    else:
        sweep = oracle_spectrum(cfg, ns.M)
        values = sweep.lowest(ns.k)
        extra = {"conjugate_asymmetry": sweep.conjugate_asymmetry()}
    try:
        ref = np.array([r.energy for r in find_spectrum(cfg, ns.k, allow_complex=True)])
        idx = match_levels(ref, values)
        rel = np.abs(values[idx] / ref - 1)
        comparison = {"reference": ref, "relative_error": rel}
    except (MergerError, ConvergenceError) as exc:
        rel, comparison = None, {"unavailable": str(exc)}
    rows = []
    for i, v in enumerate(values):
        err = ""
        if rel is not None and i in set(idx.tolist()):
            err = float(rel[list(idx).index(i)])
        rows.append([i + 1, float(v.real), float(v.imag), err])
    result = {"a": cfg.a, "xi": cfg.xi, "M": ns.M, "richardson": ns.richardson,
              "eigenvalues": values, "comparison": comparison, **extra}
    ok = True
    if rel is not None and ns.rel_tol is not None:
        ok = bool(np.all(rel <= ns.rel_tol))
    return Outcome(result, ["index", "re", "im", "relative_error"], rows, ok,
                   {"relative": ns.rel_tol})


def cmd_verify(ns) -> Outcome:
    from .acceptance import run_all
    results = run_all(ns.only)
    if ns.format != "json":
        for r in results:
            print(r.line(), file=sys.stderr)
    rows = [[r.number, r.title, "PASS" if r.passed else "FAIL", round(r.elapsed, 3), r.limit, r.detail]
            for r in results]
    result = {"criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                            "elapsed": r.elapsed, "limit": r.limit, "detail": r.detail}
                           for r in results]}
    return Outcome(result, ["criterion", "title", "status", "seconds", "limit", "detail"], rows,
                   all(r.passed for r in results), {"per_criterion": "see detail"})


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptwell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out-dir", default=os.environ.get("PTWELL_OUT_DIR"),
                        help="directory for output files (default: $PTWELL_OUT_DIR, else stdout)")
    well = argparse.ArgumentParser(add_help=False)
    well.add_argument("--a", type=decimal_arg, default=Decimal("0.5"))
    well.add_argument("--xi", type=decimal_arg, default=Decimal("0"))
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common, well], help="real (and complex) levels")
    s.add_argument("--n-max", type=int, default=6)
    s.add_argument("--allow-complex", action="store_true")
    s.add_argument("--sweep-xi", type=sweep_arg, metavar="LO:HI:STEP")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("wavefunction", parents=[common, well], help="one eigenfunction on a grid")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--grid-points", type=int, default=201)
    s.set_defaults(func=cmd_wavefunction)

    s = sub.add_parser("critical", parents=[common], help="reality boundary xi_crit(a)")
    s.add_argument("--a", type=decimal_arg, default=Decimal("0.5"))
    s.add_argument("--sweep-a", type=sweep_arg, metavar="LO:HI:STEP")
    s.add_argument("--level-window", type=int, default=8)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_critical)

    s = sub.add_parser("crossings", parents=[common], help="level crossings at a = 1/2")
    s.add_argument("--m-max", type=int, default=3)
    s.set_defaults(func=cmd_crossings)

    s = sub.add_parser("series", parents=[common], help="exact rational expansions")
    s.add_argument("--kind", choices=("z", "tau", "sc", "matrix", "tan"), default="z")
    s.add_argument("--order", type=int, default=None)
    s.add_argument("--branch", choices=("x", "y"), default="x")
    s.add_argument("--convention", choices=("branch", "printed"), default="branch")
    s.set_defaults(func=cmd_series)

    s = sub.add_parser("metric", parents=[common, well], help="biorthogonal system and metric")
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--weights", type=float_list, default=None)
    s.set_defaults(func=cmd_metric)

    s = sub.add_parser("oracle", parents=[common, well], help="sine-basis Galerkin spectrum")
    s.add_argument("--M", type=int, default=512)
    s.add_argument("--k", type=int, default=6)
    s.add_argument("--richardson", action="store_true")
    s.add_argument("--rel-tol", type=float, default=None)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", type=int_list, default=None, metavar="1,2,...")
    s.set_defaults(func=cmd_verify)
    return p


_DEFAULT_ORDER = {"z": 11, "tau": 5, "sc": 10, "matrix": 8, "tan": 8}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "series" and ns.order is None:
        ns.order = _DEFAULT_ORDER[ns.kind]
    params = {k: v for k, v in vars(ns).items() if k not in ("func", "out_dir", "command")}
    try:
        outcome = ns.func(ns)
    except Exception as exc:  # every failure becomes a machine-readable record
        record = {"error": {"type": type(exc).__name__, "message": str(exc)},
                  "manifest": manifest(ns.command, params, {})}
        sys.stdout.write(json.dumps(jsonable(record), indent=2, sort_keys=True) + "\n")
        return 2
    text = render(ns.format, manifest(ns.command, params, outcome.tolerances), outcome)
    emit(text, ns.command, ns.format, ns.out_dir)
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    sys.exit(main())
