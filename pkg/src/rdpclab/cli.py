"""Command-line front end: solve, sweep, report, verify.

Exit codes: 0 success (and, for verify, all checks passing), 1 usage or
input error, 2 infeasible budgets (solve only). Verify exits 3 when a check
fails. JSON goes to stdout newline-terminated; sweeps write UTF-8 CSV.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .metrics import MetricError, RdpcBudget
from .model import GmmSource, ModelError
from .rdpco import InfeasibleBudgetError, SolverConfig, SolverError, solve
from .sweep import SweepConfig, SweepConfigError, analyze_sweep, read_csv, run_sweep, write_csv
from .verify import run_battery


def _source_from_args(args) -> GmmSource:
    rng = np.random.default_rng(args.cn_seed)
    return GmmSource(c_n=rng.standard_normal(args.n) * np.sqrt(args.cn_variance), p0=args.p0)


def cmd_solve(args) -> int:
    try:
        budgets = RdpcBudget(dist=args.dist, perc=args.perc, cls=args.cls)
        src = _source_from_args(args)
        config = SolverConfig(seed=args.seed)
    except (MetricError, ModelError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        point = solve(src, args.m, budgets, config)
    except InfeasibleBudgetError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(point.to_json())
    return 0


def cmd_sweep(args) -> int:
    try:
        config = SweepConfig.from_file(args.config)
    except SweepConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = run_sweep(config, jobs=args.jobs)
    write_csv(rows, args.out)
    print(json.dumps({"rows": len(rows), "out": str(args.out)}))
    return 0


def cmd_report(args) -> int:
    try:
        df = read_csv(args.csv)
    except (SweepConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    results = analyze_sweep(df)
    out_dir = Path(args.out) if args.out else Path(args.csv).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if not args.no_figures:
        from .plots import render_cls_comparison, render_rate_curves

        figures = render_rate_curves(df, out_dir) + render_cls_comparison(df, out_dir)
        results["figures"] = [str(p) for p in figures]
    (out_dir / "report.json").write_text(json.dumps(results, indent=2) + "\n", encoding="utf-8")
    for curve in results["curves"]:
        status = "pass" if curve["non_increasing"] and curve["convex"] else "FAIL"
        print(
            f"[{status}] m={curve['m']} P={curve['perc_budget']:g} C={curve['cls_budget']:g}: "
            f"non_increasing={curve['non_increasing']} convex={curve['convex']}"
        )
    for comp in results["cls_comparisons"]:
        status = "pass" if comp["pointwise_ge"] else "FAIL"
        print(
            f"[{status}] m={comp['m']} P={comp['perc_budget']:g}: "
            f"rate(C={comp['cls_small']:g}) >= rate(C={comp['cls_large']:g})"
        )
    for comp in results["m_comparisons"]:
        status = "pass" if comp["m2_le_m3_pointwise"] else "FAIL"
        print(f"[{status}] P={comp['perc_budget']:g} C={comp['cls_budget']:g}: m=2 curve <= m=3 curve")
    print(json.dumps({k: results[k] for k in ("all_curves_ok", "all_cls_ok", "all_m_ok")}))
    return 0


def cmd_verify(args) -> int:
    summary = run_battery(quick=args.quick, seed=args.seed)
    print(json.dumps(summary))
    return 0 if summary["all_passed"] else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdpclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one operating point and print it as JSON")
    p_solve.add_argument("--n", type=int, default=5)
    p_solve.add_argument("--m", type=int, default=2)
    p_solve.add_argument("--dist", type=float, required=True)
    p_solve.add_argument("--perc", type=float, required=True)
    p_solve.add_argument("--cls", type=float, required=True)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--cn-seed", type=int, default=4)
    p_solve.add_argument("--cn-variance", type=float, default=4.0)
    p_solve.add_argument("--p0", type=float, default=0.5)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a budget/dimension sweep from a JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="curve-shape report (and figures) from a sweep CSV")
    p_report.add_argument("csv")
    p_report.add_argument("--out", default=None, help="output directory (default: CSV directory)")
    p_report.add_argument("--no-figures", action="store_true")
    p_report.set_defaults(func=cmd_report)

    p_verify = sub.add_parser("verify", help="run the oracle battery and print a JSON summary")
    p_verify.add_argument("--quick", action="store_true")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
