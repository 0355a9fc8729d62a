"""Command line front end.

    ballgalerkin solve CONFIG          run a convergence study
    ballgalerkin eval SOLUTION POINTS  tabulate a stored solution
    ballgalerkin quadcheck D Q         exactness report for a ball rule
    ballgalerkin catalog [NAME]        list or print built-in problems

``CONFIG`` is a configuration file or the name of a built-in problem.
"""
from __future__ import annotations

import argparse
import io
import itertools
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .config import ConfigError, StudyReport, load_config, run_study
from .io import SolutionFileError, load_solution, read_points, save_solution
from .quadrature import ball_rule, disk_rule, monomial_integral

__all__ = ["main", "format_table", "format_csv", "format_data", "quadcheck_report"]

CSV_COLUMNS = ("n", "N_n", "newton_iters", "residual_inf", "max_error")
QUAD_TOL = {2: 1e-12, 3: 1e-11}


def _num(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else "nan"


def format_csv(report: StudyReport) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in report.rows:
        out.write(f"{r.n},{r.size},{r.newton_iters},{_num(r.residual_inf)},{_num(r.max_error)}\n")
    return out.getvalue()


def format_data(report: StudyReport) -> str:
    """Lines ``n log10(max_error)`` for plotting; rows without an error are skipped."""
    lines = ["# n log10(max_error)"]
    for r in report.rows:
        if math.isfinite(r.max_error) and r.max_error > 0:
            lines.append(f"{r.n} {math.log10(r.max_error)!r}")
    return "\n".join(lines) + "\n"


def format_table(report: StudyReport) -> str:
    cfg = report.config
    s = cfg.solve
    ref = cfg.reference if cfg.reference is not None else "none"
    lines = [
        f"problem {cfg.name}: d={cfg.d}, map={cfg.map.name}, bc={cfg.bc}, reference={ref}",
        f"newton_tol={s.newton_tol:g} max_newton={s.max_newton} damping={s.damping:g} "
        f"max_halvings={s.max_halvings} quad_scale={s.quad_scale:g} quad_extra={s.quad_extra}",
        "",
        f"{'n':>4} {'N_n':>6} {'newton':>6} {'residual_inf':>13} {'max_error':>12}",
    ]
    for r in report.rows:
        lines.append(f"{r.n:>4} {r.size:>6} {r.newton_iters:>6} {r.residual_inf:>13.3e} {r.max_error:>12.4e}")
    if report.failure:
        lines.append("")
        lines.append(f"FAILED: {report.failure}")
    return "\n".join(lines) + "\n"


def quadcheck_report(d: int, q: int):
    """Worst relative monomial error of the rule of order q; returns (text, ok)."""
    if d == 2:
        rule = disk_rule(q)
    elif d == 3:
        rule = ball_rule(q)
    else:
        raise ValueError("d must be 2 or 3")
    deg = rule.exactness
    worst, worst_exp = 0.0, None
    for exps in itertools.product(range(deg + 1), repeat=d):
        if sum(exps) > deg:
            continue
        approx = rule.integrate(np.prod(rule.nodes ** np.array(exps), axis=1))
        exact = monomial_integral(exps)
        # odd monomials integrate to zero; measure those absolutely
        err = abs(approx - exact) / abs(exact) if exact else abs(approx)
        if err > worst:
            worst, worst_exp = err, exps
    ok = worst <= QUAD_TOL[d]
    text = (
        f"d={d} q={q}: {len(rule)} nodes, exact to degree {deg}\n"
        f"worst relative error {worst:.3e}"
        + (f" at exponents {worst_exp}" if worst_exp else "")
        + f" (tolerance {QUAD_TOL[d]:g}): {'ok' if ok else 'FAIL'}\n"
    )
    return text, ok


def _load(target):
    path = Path(target)
    if path.exists():
        return load_config(path)
    if target in catalog.CATALOG:
        return catalog.get_config(target)
    raise ConfigError(f"{target}: no such file or built-in problem")


def _cmd_solve(args) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outputs = dict(cfg.outputs)
    for key in ("table", "csv", "data", "solution"):
        value = getattr(args, key)
        if value:
            outputs[key] = value
    try:
        report = run_study(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    table = format_table(report)
    if not args.quiet:
        sys.stdout.write(table)
    writers = {"table": lambda: table, "csv": lambda: format_csv(report), "data": lambda: format_data(report)}
    for key, make in writers.items():
        if key in outputs:
            Path(outputs[key]).write_text(make())
    if "solution" in outputs and report.solutions:
        try:
            save_solution(report.solutions[-1], outputs["solution"], cfg.descriptor())
        except SolutionFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    if report.failure:
        print(f"error: {report.failure}", file=sys.stderr)
        return 1
    return 0


def _cmd_eval(args) -> int:
    try:
        sol = load_solution(args.solution)
        pts = read_points(args.points, sol.d)
        values = sol.evaluate_physical(pts) if args.physical else sol.evaluate(pts)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    names = ("s", "t", "v") if args.physical else ("x", "y", "z")
    out = sys.stdout
    out.write(",".join(names[: sol.d]) + ",u\n")
    for p, val in zip(pts, values):
        out.write(",".join(repr(float(c)) for c in p) + f",{float(val)!r}\n")
    return 0


def _cmd_quadcheck(args) -> int:
    if args.d not in (2, 3) or args.q < 1:
        print("error: d must be 2 or 3 and q >= 1", file=sys.stderr)
        return 2
    text, ok = quadcheck_report(args.d, args.q)
    sys.stdout.write(text)
    return 0 if ok else 1


def _cmd_catalog(args) -> int:
    if args.name is None:
        for name in catalog.names():
            print(name)
        return 0
    if args.name not in catalog.CATALOG:
        print(f"error: no built-in problem {args.name!r}", file=sys.stderr)
        return 2
    sys.stdout.write(catalog.CATALOG[args.name])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ballgalerkin", description="Spectral Galerkin solver on ball-mapped domains.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress (-vv for Newton steps)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the convergence study described by a configuration")
    p.add_argument("config", help="configuration file or built-in problem name")
    p.add_argument("--table", help="write the human-readable table here")
    p.add_argument("--csv", help="write the CSV table here")
    p.add_argument("--data", help="write (n, log10 error) plot data here")
    p.add_argument("--solution", help="store the finest reported solution here")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the table")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("eval", help="evaluate a stored solution at points")
    p.add_argument("solution")
    p.add_argument("points", help="text file with one point per line")
    p.add_argument("--physical", action="store_true", help="points are in the physical domain (needs the map inverse)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("quadcheck", help="check the exactness of the disk or ball rule")
    p.add_argument("d", type=int)
    p.add_argument("q", type=int)
    p.set_defaults(func=_cmd_quadcheck)

    p = sub.add_parser("catalog", help="list built-in problems or print one")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=_cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
