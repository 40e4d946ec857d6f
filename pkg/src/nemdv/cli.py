"""Command-line entry point: ``nemdv {solve,sweep,prices,audit}``.

Exit codes: 0 success, 1 invalid input or failed audit, 2 solve failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .engine import SolveOptions, solve_scenario
from .formulation import (
    STEP_ROLES,
    DispatchSolution,
    Status,
    audit_feasibility,
    build_milp,
    compute_bill,
    simultaneous_bes_steps,
)
from .io import InputError, fmt, load_scenario, read_dispatch, write_dispatch, write_results
from .policy import build_export_rules
from .sweep import run_sweep, sweep_config_from_dict
from .types import ScenarioError, validate_scenario

log = logging.getLogger("nemdv")

EXIT_OK, EXIT_INVALID, EXIT_SOLVE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--out", help="output file (default: stdout where applicable)")
    common.add_argument("--gap-tol", type=float, default=1e-6)
    common.add_argument("--strict-bes", action="store_true",
                        help="forbid simultaneous battery charge and discharge")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--engine", choices=("auto", "simplex", "highs"), default="auto")
    common.add_argument("--block-pv-exports", action="store_true",
                        help="grid-charging scheme without battery export also blocks PV exports")

    p = _Parser(prog="nemdv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve one scenario")
    sw = sub.add_parser("sweep", parents=[common], help="run the scenario's sweep grid")
    sw.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    sub.add_parser("prices", parents=[common], help="emit the export-price series")
    au = sub.add_parser("audit", parents=[common], help="re-check a dispatch CSV")
    au.add_argument("--dispatch", required=True, help="dispatch CSV written by 'solve'")
    return p


def _options(args) -> SolveOptions:
    return SolveOptions(
        gap_tol=args.gap_tol,
        engine=args.engine,
        strict_bes=args.strict_bes,
        block_pv_exports_without_bes_export=args.block_pv_exports,
    )


def _bill_dict(bill) -> dict:
    return {
        "demand_charge": bill.demand_charge_total,
        "energy_charge": bill.energy_charge_total,
        "export_revenue": bill.export_revenue,
        "net_bill": bill.net_bill,
    }


def _cmd_solve(args, sf) -> int:
    res = solve_scenario(sf.scenario, _options(args))
    if res.status is not Status.OPTIMAL:
        print(json.dumps({"status": res.status.value}), file=sys.stdout)
        return EXIT_SOLVE
    if args.out:
        write_dispatch(res, args.out)
    summary = {"status": res.status.value, **_bill_dict(res.bill),
               "objective": res.objective, "months": len(res.months)}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_sweep(args, sf) -> int:
    if not sf.sweep:
        log.error("scenario file has no 'sweep' block")
        return EXIT_INVALID
    cfg = sweep_config_from_dict(sf.scenario, sf.sweep, _options(args))
    rows = run_sweep(cfg, jobs=args.jobs)
    write_results(rows, args.out or "/dev/stdout", timing=args.timing)
    failed = [r for r in rows if r.status != Status.OPTIMAL.value]
    for r in failed:
        log.error("point %s: %s", r.axes, r.status)
    return EXIT_SOLVE if failed else EXIT_OK


def _cmd_prices(args, sf) -> int:
    s = sf.scenario
    rules = build_export_rules(s, args.block_pv_exports)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["hour", "energy_price", "export_price", "in_export_window"])
        window = set(rules.s_set)
        for t, (en, ex) in enumerate(zip(s.tariff.energy_price.values, rules.export_price.values)):
            w.writerow([t, fmt(float(en)), fmt(float(ex)), int(t in window)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_audit(args, sf) -> int:
    s = sf.scenario
    values, zeta = read_dispatch(args.dispatch)
    n = len(values["d_net"])
    if n != s.n_steps:
        log.error("dispatch has %d steps, scenario has %d", n, s.n_steps)
        return EXIT_INVALID
    rules = build_export_rules(s, args.block_pv_exports)
    problems = []
    total = None
    for start, stop in s.calendar.month_blocks():
        sub, sub_rules = s.slice(start, stop), rules.slice(start, stop)
        model = build_milp(sub, sub_rules, strict_bes=args.strict_bes)
        part = {r: values[r][start:stop] for r in STEP_ROLES}
        d_max = np.array([
            max(0.0, float(part["d_net"][p.mask].max())) if p.mask.any() else 0.0
            for p in sub.tariff.demand_periods
        ])
        z = {sx: zeta.get(start + sx, 0.0) for sx in sub_rules.s_set}
        u = (part["p_cha"] > 0).astype(float) if args.strict_bes and sub.bes else None
        d = DispatchSolution(Status.OPTIMAL, part, d_max, z, u)
        for v in audit_feasibility(d, model, tol=1e-6):
            problems.append(f"month {int(sub.calendar.month[0])}: {v}")
        for t in simultaneous_bes_steps(d):
            log.info("simultaneous charge/discharge at step %d", start + t)
        bill = compute_bill(d, sub, sub_rules)
        total = bill if total is None else total + bill
    for line in problems:
        print(line)
    print(json.dumps({"violations": len(problems), **_bill_dict(total)}, indent=2))
    return EXIT_INVALID if problems else EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("NEMDV_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _parser().parse_args(argv)
    try:
        sf = load_scenario(args.scenario)
        problems = validate_scenario(sf.scenario)
        if problems:
            for p in problems:
                print(f"invalid scenario: {p}", file=sys.stderr)
            return EXIT_INVALID
        handler = {
            "solve": _cmd_solve,
            "sweep": _cmd_sweep,
            "prices": _cmd_prices,
            "audit": _cmd_audit,
        }[args.command]
        return handler(args, sf)
    except (InputError, ScenarioError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
