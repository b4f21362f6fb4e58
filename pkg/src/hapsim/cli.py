"""Command-line interface.

Subcommands: ``run`` (one scenario, headline metrics), ``densify`` (rejected
log to plan CSV), ``sweep`` (demand sweep CSV), ``calibrate`` (offered-load
calibration), ``linkbudget`` (analytic overlay-link numbers). Outputs carry
no timestamps: identical config and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import sys

from .association import (
    collect_rejected_points,
    make_trajectory_writer,
    run_simulation,
    write_rejected_points_csv,
    write_slot_results_csv,
)
from .config import RunConfig, default_config, load_config
from .densify import plan_sites, read_demand_points_csv, read_plan_csv, write_plan_csv
from .errors import HapsimError
from .experiments import calibrate_load, run_sweep, write_sweep_csv
from .linkbudget import (
    LinkBudgetParams,
    footprint_radius,
    parity_distance,
    propagation_latency,
)
from .metrics import summarize, summary_csv, summary_text
from .scenario import make_haps_site, place_initial_grid


def _load(args) -> RunConfig:
    if args.config:
        return load_config(args.config, seed_override=args.seed)
    return default_config(seed_override=args.seed)


def _cmd_run(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenario
    sites = place_initial_grid(scenario)
    summary_sites = list(sites)
    if scenario.haps_capacity_mbps > 0:
        summary_sites.append(make_haps_site(scenario, site_id=max(s.id for s in sites) + 1))

    sink = None
    trajectory_fh = None
    if args.trajectory_csv:
        trajectory_fh = open(args.trajectory_csv, "w", newline="")
        sink = make_trajectory_writer(trajectory_fh)
    try:
        results = run_simulation(scenario, sites, trajectory_sink=sink)
    finally:
        if trajectory_fh is not None:
            trajectory_fh.close()

    summary = summarize(
        results, summary_sites, coefficient_kw_per_gbps=cfg.power_coefficient_kw_per_gbps
    )
    label = "baseline" if scenario.haps_capacity_mbps == 0 else "haps-assisted"
    print(summary_text(summary, title=label))
    if args.summary_csv:
        with open(args.summary_csv, "w", newline="") as fh:
            fh.write(summary_csv({label: summary}))
    if args.slot_csv:
        write_slot_results_csv(results, args.slot_csv)
    if args.rejected_csv:
        write_rejected_points_csv(results, args.rejected_csv)
    return 0


def _cmd_densify(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenario
    if args.points:
        points = read_demand_points_csv(args.points)
    else:
        sc = scenario.with_(haps_capacity_mbps=0.0)
        results = run_simulation(sc, place_initial_grid(sc))
        points = collect_rejected_points(results)
    radius = args.radius if args.radius is not None else scenario.bs_coverage_radius_m
    capacity = args.capacity if args.capacity is not None else scenario.bs_capacity_mbps
    plan = plan_sites(
        points, radius_m=radius, capacity_mbps=capacity,
        id_start=scenario.bs_rows * scenario.bs_cols,
    )
    write_plan_csv(plan, args.out)
    print(f"planned {len(plan.new_sites)} added site(s) for {plan.input_point_count} rejected point(s)")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    densified_sites = None
    if args.plan:
        densified_sites = list(read_plan_csv(args.plan).new_sites)
    records = run_sweep(
        cfg.scenario,
        list(cfg.sweep.mean_demands_mbps),
        cfg.sweep.variants(),
        densified_sites=densified_sites,
        coefficient_kw_per_gbps=cfg.power_coefficient_kw_per_gbps,
    )
    write_sweep_csv(records, args.out)
    print(f"wrote {len(records)} sweep record(s) to {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    cfg = _load(args)
    result = calibrate_load(
        cfg.scenario,
        target_utilization=args.target_utilization,
        target_rejection=args.target_rejection,
        calibration_num_ts=args.num_ts,
    )
    print(
        f"active_user_count={result.active_user_count} "
        f"utilization={result.utilization:.4f} rejection={result.rejection:.4f} "
        f"(targets: utilization={result.target_utilization:.4f}, "
        f"rejection={result.target_rejection:.4f}; {result.calibration_num_ts} slots)"
    )
    return 0


def _cmd_linkbudget(args) -> int:
    params = LinkBudgetParams(
        haps_altitude_m=args.altitude_m,
        haps_pathloss_exponent=args.haps_exponent,
        terrestrial_pathloss_exponent=args.terrestrial_exponent,
        min_elevation_deg=args.elevation_deg,
        propagation_speed_mps=args.propagation_speed,
    )
    print(f"parity_distance_m={parity_distance(params):.2f}")
    print(f"propagation_latency_ms={propagation_latency(params):.4f}")
    print(f"footprint_radius_m={footprint_radius(params):.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsim",
        description="Time-slotted urban RAN simulator with an aerial super-cell overlay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="INI config file (defaults to the built-in scenario)")
        p.add_argument("--seed", type=int, help="override the scenario seed")

    p_run = sub.add_parser("run", help="simulate one scenario and print headline metrics")
    add_common(p_run)
    p_run.add_argument("--summary-csv", help="write the one-row metrics CSV here")
    p_run.add_argument("--slot-csv", help="write per-(slot, site) accounting here")
    p_run.add_argument("--rejected-csv", help="write the rejected demand-point log here")
    p_run.add_argument("--trajectory-csv", help="write per-slot user positions/demands here")
    p_run.set_defaults(func=_cmd_run)

    p_dens = sub.add_parser("densify", help="plan added sites from a rejected-point log")
    add_common(p_dens)
    p_dens.add_argument("--points", help="rejected-point CSV (default: simulate the baseline)")
    p_dens.add_argument("--radius", type=float, help="added-site coverage radius in m")
    p_dens.add_argument("--capacity", type=float, help="added-site capacity in Mbps")
    p_dens.add_argument("--out", required=True, help="plan CSV output path")
    p_dens.set_defaults(func=_cmd_densify)

    p_sweep = sub.add_parser("sweep", help="run the demand sweep across variants")
    add_common(p_sweep)
    p_sweep.add_argument("--plan", help="reuse a previously exported plan CSV")
    p_sweep.add_argument("--out", required=True, help="sweep CSV output path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cal = sub.add_parser("calibrate", help="calibrate the active-user count")
    add_common(p_cal)
    p_cal.add_argument("--target-utilization", type=float, default=0.73)
    p_cal.add_argument("--target-rejection", type=float, default=0.01)
    p_cal.add_argument("--num-ts", type=int, default=200, help="slots per calibration run")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_lb = sub.add_parser("linkbudget", help="print the analytic overlay-link numbers")
    p_lb.add_argument("--altitude-m", type=float, default=20_000.0)
    p_lb.add_argument("--haps-exponent", type=float, default=2.0)
    p_lb.add_argument("--terrestrial-exponent", type=float, default=4.0)
    p_lb.add_argument("--elevation-deg", type=float, default=30.0)
    p_lb.add_argument("--propagation-speed", type=float, default=2.998e8)
    p_lb.set_defaults(func=_cmd_linkbudget)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HapsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
