"""Command-line entry point.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import _kernels, pv, report, simkit
from .battery import calibrate_profile, profile_trajectory
from .config import LoadedConfig, load_config, profile_to_yaml, with_overrides
from .errors import ArbcError, ConfigError

log = logging.getLogger("arbcsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _config(args) -> LoadedConfig:
    cfg = load_config(args.config) if args.config else LoadedConfig(simkit.Scenario())
    return with_overrides(cfg, mode=getattr(args, "mode", None), dt_s=args.dt)


def cmd_run(args):
    cfg = _config(args)
    rep = simkit.run_session(cfg.scenario)
    log.info("%s session: %.6g Wh battery, %.6g Wh supplied over %.4f h (%s)",
             cfg.scenario.mode.value, rep.battery_energy_wh, rep.supplied_energy_wh,
             rep.duration_h, rep.termination_reason)
    report.emit_report(rep, args.format, args.out)
    if args.series:
        Path(args.series).write_text(report.series_to_csv(rep.series))


def cmd_sweep(args):
    cfg = _config(args)
    grid = cfg.grid or simkit.default_grid()
    workers = args.workers or cfg.workers
    table = simkit.sweep(grid, cfg.scenario, workers=workers, keep_series=bool(args.curves_dir))
    failed = [r for r in table.rows if r.error]
    log.info("sweep: %d cells, %d failed", len(table.rows), len(failed))
    report.emit_report(table, args.format, args.out)
    if args.curves_dir:
        out = Path(args.curves_dir)
        out.mkdir(parents=True, exist_ok=True)
        for key, (t, p_s) in table.curves.items():
            wl, temp, air, _, radius, mode = key
            name = f"ps_{wl}nm_{report.fmt(temp)}C_{air}_{report.fmt(radius)}km_{mode}.csv"
            rows = ("t_h,p_s_w\n" + "".join(f"{report.fmt(float(a))},{report.fmt(float(b))}\n"
                                             for a, b in zip(t, p_s)))
            (out / name).write_text(rows)


def cmd_compare(args):
    cfg = _config(args)
    rbc = simkit.run_session(replace(cfg.scenario, mode=simkit.Mode.RBC))
    arbc = simkit.run_session(replace(cfg.scenario, mode=simkit.Mode.ARBC))
    savings = simkit.compare_sessions(rbc, arbc)
    log.info("battery energy saved %.4g%%, supplied energy saved %.4g%%",
             savings.battery_energy_saved_pct, savings.supplied_energy_saved_pct)
    report.emit_report(savings, args.format, args.out)


def cmd_calibrate_profile(args):
    cfg = _config(args)
    base = cfg.scenario.profile
    if args.tc_duration is not None:
        base = replace(base, tc_duration_h=args.tc_duration)
    params = calibrate_profile(base, target_energy_wh=args.target_energy,
                               cc_end_fraction=args.cc_end_fraction, dt_h=cfg.scenario.dt_h)
    traj = profile_trajectory(params, cfg.scenario.dt_h)
    log.info("calibrated: %.6g Wh over %.6g h (%s)", traj.energy_wh(), traj.duration_h,
             traj.termination_reason)
    text = ("# written by `arbcsim calibrate-profile`: "
            f"target {args.target_energy} Wh, CC ends at {args.cc_end_fraction:g} of capacity\n"
            + profile_to_yaml(params))
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


def cmd_regen_pv_fit(args):
    table = pv.load_fit_table(args.fit_table) if args.fit_table else pv.DEFAULT_FIT_TABLE
    rows = []
    lines = ["wavelength_nm,temp_c,a2_regen,a2_table,a2_dev_pct,b2_regen,b2_table"]
    for wl in table.wavelengths():
        spec = pv.panel_spec(wl)
        ref = table.for_wavelength(wl)
        if args.recalibrate:
            target = pv.pv_fit_coefficients(wl, args.anchor_temp, table)[0]
            spec = pv.calibrate_aperture(spec, target, args.anchor_temp)
            log.info("%d nm aperture %.6g cm^2", wl, spec.aperture_cm2)
        fitted = pv.regenerate_fit(spec, [t for t, _, _ in ref])
        for (t, a2, b2), (_, a_ref, b_ref) in zip(fitted, ref):
            rows.append((wl, t, a2, b2))
            dev = 100.0 * (a2 / a_ref - 1.0)
            lines.append(",".join(report.fmt(float(x)) if isinstance(x, float) else str(x)
                                  for x in (wl, t, a2, a_ref, dev, b2, b_ref)))
    deviation = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(deviation)
    else:
        pv.save_fit_table(pv.PvFitTable(tuple(rows)), args.out)
        sys.stderr.write(deviation)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML scenario/sweep configuration")
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--dt", type=float, help="time step override in seconds")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for scripts; the simulator uses no randomness")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="arbcsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run one charging session")
    run.add_argument("--mode", choices=("RBC", "ARBC", "rbc", "arbc"))
    run.add_argument("--series", help="also write the per-tick power chain to this CSV")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", parents=[common], help="evaluate a scenario grid")
    sw.add_argument("--mode", choices=("RBC", "ARBC", "rbc", "arbc"), help=argparse.SUPPRESS)
    sw.add_argument("--workers", type=int)
    sw.add_argument("--curves-dir", help="write per-cell supply-power curves here")
    sw.set_defaults(func=cmd_sweep)

    cmp_ = sub.add_parser("compare", parents=[common], help="RBC vs ARBC savings for one scenario")
    cmp_.set_defaults(func=cmd_compare)

    cal = sub.add_parser("calibrate-profile", parents=[common],
                         help="fit the charging-profile shape to the session energy target")
    cal.add_argument("--target-energy", type=float, default=5.96)
    cal.add_argument("--cc-end-fraction", type=float, default=0.6)
    cal.add_argument("--tc-duration", type=float)
    cal.set_defaults(func=cmd_calibrate_profile)

    regen = sub.add_parser("regen-pv-fit", parents=[common],
                           help="regenerate the battery-power fit from the diode model")
    regen.add_argument("--fit-table", help="reference fit table CSV (default: embedded)")
    regen.add_argument("--recalibrate", action="store_true",
                       help="re-fit each panel aperture at --anchor-temp first")
    regen.add_argument("--anchor-temp", type=float, default=25.0)
    regen.set_defaults(func=cmd_regen_pv_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING - 10 * min(args.verbose, 2))
    log.debug("kernel backend: %s", _kernels.BACKEND)
    try:
        args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ArbcError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    finally:
        log.removeHandler(handler)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
