"""Batch command-line entry point.

Subcommands: run a scenario to CSV + summary JSON, extract the
zero-excess contour, predict the equilibrium on the current target line,
fit a glide polar from logged data, and serve a live session. Outputs
contain no timestamps, so repeated invocations with the same inputs are
byte-identical. Exit codes: 0 success (run: settled), 2 ran but did not
settle, 1 operational error.

Set OROSOAR_LOG=debug|info|warning for diagnostic verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import airframe as af
from . import analysis
from . import sim
from .errors import NoIntersection, OrosoarError

log = logging.getLogger("orosoar")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_SETTLED = 2

# Settle band for run summaries: fraction of the analysis-domain diagonal.
SETTLE_BAND_FRACTION = 0.02


def _setup_logging() -> None:
    level = os.environ.get("OROSOAR_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_scenario(args: argparse.Namespace) -> sim.Scenario:
    scenario = sim.scenario_from_json(args.scenario)
    overrides = {}
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = args.dt
    if getattr(args, "duration", None) is not None:
        overrides["duration"] = args.duration
    if getattr(args, "scale", None) is not None:
        from .windfield import ScaleSchedule
        overrides["schedule"] = ScaleSchedule(((0.0, args.scale),))
    if overrides:
        from dataclasses import replace
        scenario = replace(scenario, **overrides)
    return scenario


def _predict(scenario: sim.Scenario, tgl, t: float):
    z_range = analysis.clipped_z_range(
        tgl, scenario.field_spec, scenario.schedule, scenario.polar,
        scenario.predict_z_range(), t,
    )
    return analysis.predict_equilibrium(
        tgl, scenario.field_spec, scenario.schedule, scenario.polar, z_range, t)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    result = sim.run(scenario)
    sim.write_log_csv(result.records, args.out)
    log.info("wrote %d records to %s", len(result.records), args.out)

    final_tgl = scenario.tgl_schedule[-1][1]
    t_end = result.records[-1].t if result.records else 0.0
    settle_band = SETTLE_BAND_FRACTION * scenario.domain.diagonal
    summary: dict = {
        "records": len(result.records),
        "terminated": result.terminated,
        "diagnostic": result.diagnostic,
        "settle_band": settle_band,
    }
    settled = False
    try:
        predicted = _predict(scenario, final_tgl, t_end)
        metrics = sim.measure_convergence(
            result.records, final_tgl, predicted, settle_band)
        tail = result.records[math.floor(0.8 * len(result.records)):]
        summary["predicted"] = {
            "x": predicted.position[0], "z": predicted.position[1],
            "stability": predicted.stability,
            "crossings": predicted.crossings,
            "tgl_zeuc_angle_deg": predicted.tgl_zeuc_angle,
        }
        summary["settled_position"] = {
            "x": sum(r.x for r in tail) / len(tail),
            "z": sum(r.z for r in tail) / len(tail),
        }
        summary["metrics"] = {
            "settled": metrics.settled,
            "settle_time": metrics.settle_time if math.isfinite(metrics.settle_time) else None,
            "final_offset": metrics.final_offset,
            "rms_e_rho": metrics.rms_e_rho,
        }
        settled = metrics.settled and not result.terminated
    except (NoIntersection, OrosoarError) as exc:
        summary["predicted"] = None
        summary["prediction_error"] = str(exc)

    summary_path = Path(args.out).with_suffix(".summary.json")
    with open(summary_path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    log.info("summary written to %s", summary_path)
    return EXIT_OK if settled else EXIT_NOT_SETTLED


def cmd_zeuc(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    cell = args.cell if args.cell is not None else scenario.zeuc_cell
    contour = analysis.extract_zeuc(
        scenario.field_spec, scenario.schedule, scenario.polar,
        scenario.domain, cell, args.t,
    )
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        with open(out, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("polyline_id", "x", "z"))
            for row in analysis.contour_to_csv_rows(contour):
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    else:
        with open(out, "w") as f:
            json.dump(analysis.contour_to_json(contour, args.t), f)
            f.write("\n")
    log.info("%d polylines, %d unknown cells", len(contour.polylines),
             contour.unknown_cells)
    return EXIT_OK


def cmd_equilibrium(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args)
    tgl = scenario.tgl_schedule[0][1]
    for t_event, entry in scenario.tgl_schedule:
        if t_event <= args.t:
            tgl = entry
    predicted = _predict(scenario, tgl, args.t)
    payload = {
        "position": {"x": predicted.position[0], "z": predicted.position[1]},
        "local_wind": {"wx": predicted.local_wind[0], "wz": predicted.local_wind[1]},
        "stability": predicted.stability,
        "tgl_zeuc_angle_deg": predicted.tgl_zeuc_angle,
        "crossings": predicted.crossings,
        "tgl": {"a": tgl.a, "b": tgl.b, "c": tgl.c},
        "t": args.t,
    }
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return EXIT_OK


def cmd_fit_polar(args: argparse.Namespace) -> int:
    samples = []
    with open(args.data, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(h.strip().lower() for h in header) != ("v", "sink"):
            raise OrosoarError(f"expected header 'v,sink', got {header!r}")
        for row in reader:
            if not row:
                continue
            samples.append((float(row[0]), float(row[1])))
    v_min = args.v_min if args.v_min is not None else min(v for v, _ in samples)
    v_max = args.v_max if args.v_max is not None else max(v for v, _ in samples)
    polar, rms = af.fit_polar(samples, v_min, v_max)
    payload = {
        "coeffs": list(polar.coeffs),
        "v_min": polar.v_min,
        "v_max": polar.v_max,
        "v_me": af.v_me(polar),
        "rms": rms,
        "n_samples": len(samples),
    }
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from . import service
    scenario = _load_scenario(args)
    service.serve(scenario, port=args.port, host=args.host,
                  time_scale=args.time_scale)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orosoar",
        description="Orographic soaring workbench: simulate, analyze, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario, write log CSV + summary JSON")
    p_run.add_argument("--scenario", required=True, help="scenario JSON path")
    p_run.add_argument("--out", required=True, help="log CSV output path")
    p_run.add_argument("--dt", type=float, help="override integration step, s")
    p_run.add_argument("--duration", type=float, help="override duration, s")
    p_run.add_argument("--scale", type=float,
                       help="override wind scale with a constant factor")
    p_run.set_defaults(func=cmd_run)

    p_zeuc = sub.add_parser("zeuc", help="extract the zero-excess-updraft contour")
    p_zeuc.add_argument("--scenario", required=True)
    p_zeuc.add_argument("--out", required=True,
                        help="output path (.json or .csv)")
    p_zeuc.add_argument("--cell", type=float, help="grid cell size, m")
    p_zeuc.add_argument("--t", type=float, default=0.0, help="evaluation time, s")
    p_zeuc.add_argument("--scale", type=float,
                        help="override wind scale with a constant factor")
    p_zeuc.set_defaults(func=cmd_zeuc)

    p_eq = sub.add_parser("equilibrium",
                          help="predict the soaring equilibrium on the target line")
    p_eq.add_argument("--scenario", required=True)
    p_eq.add_argument("--out", required=True)
    p_eq.add_argument("--t", type=float, default=0.0)
    p_eq.add_argument("--scale", type=float,
                      help="override wind scale with a constant factor")
    p_eq.set_defaults(func=cmd_equilibrium)

    p_fit = sub.add_parser("fit-polar", help="fit a cubic polar from v,sink CSV data")
    p_fit.add_argument("--data", required=True, help="CSV path with header v,sink")
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--v-min", type=float, dest="v_min")
    p_fit.add_argument("--v-max", type=float, dest="v_max")
    p_fit.set_defaults(func=cmd_fit_polar)

    p_serve = sub.add_parser("serve", help="serve a live simulation session")
    p_serve.add_argument("--scenario", required=True)
    p_serve.add_argument("--port", type=int, default=8750)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--time-scale", type=float, default=1.0,
                         dest="time_scale",
                         help="simulated seconds per wall second")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_ERROR
    except (OrosoarError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
