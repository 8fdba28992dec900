"""Command-line front end.

Exit codes: 0 on success, 2 for validation errors, 3 when a requirement
cannot be covered (scarcity or RoCoF infeasibility).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .allocation import ALLOCATION_RULES
from .dynamics import (
    CONTINGENCY_SIDES,
    GENERATION,
    Contingency,
    simulate_frequency,
    write_trace_csv,
)
from .errors import ScarcityError, ValidationError
from .investment import evaluate_viability, load_ledger
from .market import PRICING_RULES, SERVICE_SIDES, clear_market, write_clearing_csv
from .scenario import (
    load_scenario,
    run_pipeline,
    sweep_allocation_curve,
    write_run_report,
    write_sweep_result,
)


def _snapshot_by_label(scenario, label):
    for snapshot in scenario.snapshots:
        if snapshot.label == label:
            return snapshot
    raise ValidationError(f"snapshots: no snapshot labelled '{label}'")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    snapshot = _snapshot_by_label(scenario, args.snapshot)
    trace = simulate_frequency(
        snapshot,
        Contingency(args.size_gw, args.side),
        args.reserve_gw,
        step_s=args.step_s,
        horizon_s=args.horizon_s,
    )
    out = _out_dir(args)
    path = out / f"trace_{snapshot.label}.csv"
    write_trace_csv(trace, path)
    print(f"nadir_hz={trace.nadir_hz:.9g}")
    print(f"nadir_time_s={trace.nadir_time_s:.9g}")
    print(f"initial_rocof_hz_per_s={trace.initial_rocof_hz_per_s:.9g}")
    print(f"secure={str(trace.secure).lower()}")
    print(f"diverges={str(trace.diverges).lower()}")
    print(f"wrote {path}")
    return 0


def _cmd_clear(args) -> int:
    scenario = load_scenario(args.scenario)
    snapshot = _snapshot_by_label(scenario, args.snapshot)
    stack = [b for b in scenario.bid_stacks[snapshot.label] if b.side == args.side]
    pricing = args.pricing or scenario.pricing_rule
    result = clear_market(args.requirement_gw, stack, pricing)
    out = _out_dir(args)
    path = out / f"clearing_{snapshot.label}_{args.side}.csv"
    write_clearing_csv(result, path)
    print(f"marginal_price={result.marginal_price:.9g}")
    print(f"total_cost_rate={result.total_cost_rate:.9g}")
    print(f"wrote {path}")
    return 0


def _cmd_allocate(args) -> int:
    scenario = load_scenario(args.scenario)
    report = run_pipeline(scenario, args.rule, args.pricing)
    out = _out_dir(args)
    written = write_run_report(report, out)
    for side in report.sides:
        print(
            f"{side.snapshot_label}/{side.service_side}: "
            f"total={side.clearing.total_cost_rate:.9g} "
            f"cutoff_gw={side.allocation.cutoff_gw:.9g}"
        )
    print(f"wrote {len(written)} files to {out}")
    return 0


def _cmd_viability(args) -> int:
    ledger = load_ledger(args.ledger)
    viable, margin = evaluate_viability(ledger)
    print(f"net_margin={margin:.9g}")
    print(f"viable={str(viable).lower()}")
    if args.out:
        out = _out_dir(args)
        path = out / "viability.csv"
        with open(path, "w", newline="") as fh:
            fh.write("net_margin,viable\n")
            fh.write(f"{margin:.9g},{str(viable).lower()}\n")
        print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    result = sweep_allocation_curve(
        scenario, side=args.side, rule=args.rule, pricing=args.pricing
    )
    out = _out_dir(args)
    written = write_sweep_result(result, out)
    for label, cutoff in result.cutoffs:
        print(f"{label}: cutoff_gw={cutoff:.9g}")
    for cap, label, shortfall in result.scarcities:
        print(f"{label}: scarcity at {cap:.9g} GW (shortfall {shortfall:.9g} GW)")
    print(f"wrote {len(written)} files to {out}")
    return 0


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    report = run_pipeline(scenario, args.rule, args.pricing)
    out = _out_dir(args)
    written = write_run_report(report, out)
    for side in report.sides:
        print(
            f"{side.snapshot_label}/{side.service_side}: "
            f"requirement_gw={side.requirement_gw:.9g} "
            f"total={side.clearing.total_cost_rate:.9g} "
            f"residual={side.allocation.residual:.9g} "
            f"cutoff_gw={side.allocation.cutoff_gw:.9g}"
        )
    print(f"wrote {len(written)} files to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqshare",
        description="Frequency-containment reserve sizing, procurement and cost sharing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, rule_pricing=True):
        p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--out", required=True, help="output directory for CSVs")
        if rule_pricing:
            p.add_argument("--rule", choices=ALLOCATION_RULES, default=None,
                           help="override the scenario's cost-sharing rule")
            p.add_argument("--pricing", choices=PRICING_RULES, default=None,
                           help="override the scenario's pricing rule")

    p = sub.add_parser("simulate", help="frequency trace after a contingency")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snapshot", required=True, help="snapshot label")
    p.add_argument("--size-gw", type=float, required=True, help="contingency size")
    p.add_argument("--side", choices=CONTINGENCY_SIDES, default=GENERATION)
    p.add_argument("--reserve-gw", type=float, required=True, help="procured reserve volume")
    p.add_argument("--step-s", type=float, default=1e-3)
    p.add_argument("--horizon-s", type=float, default=30.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("clear", help="clear one requirement against a snapshot's stack")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--side", choices=SERVICE_SIDES, default=SERVICE_SIDES[0])
    p.add_argument("--requirement-gw", type=float, required=True)
    p.add_argument("--pricing", choices=PRICING_RULES, default=None)
    p.set_defaults(func=_cmd_clear)

    p = sub.add_parser("allocate", help="steps 1-3 for every snapshot and side")
    add_common(p)
    p.set_defaults(func=_cmd_allocate)

    p = sub.add_parser("viability", help="evaluate a project ledger")
    p.add_argument("--ledger", required=True, help="ledger YAML file")
    p.add_argument("--out", default=None, help="optional output directory")
    p.set_defaults(func=_cmd_viability)

    p = sub.add_parser("sweep", help="allocated cost of a probe unit over a capacity grid")
    add_common(p)
    p.add_argument("--side", choices=CONTINGENCY_SIDES, default=GENERATION,
                   help="side of the probe unit")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("run", help="full pipeline: clearing, cascade, allocation, annual costs")
    add_common(p)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScarcityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
