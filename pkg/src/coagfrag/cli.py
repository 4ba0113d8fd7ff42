"""Command-line interface: scenario runs, audits, and re-analysis.

Exit status contract: 0 success, 2 configuration/solver error, 3 audit
failure (``check-hypotheses`` always; ``run`` only under
``--strict-hypotheses``), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .audit import audit
from .config import load_config
from .errors import CoagFragError, ConfigError
from .grid import read_density_csv
from .kernels import fragment_count
from .observables import MomentSeries, moment_ladder
from .oracles import ORACLE_CASES
from .reporting import (
    fmt,
    order_label,
    write_audit_json,
    write_gronwall_csv,
    write_moments_csv,
    write_refinement_csv,
    write_report_json,
    write_density_snapshots,
)
from .solver import assemble, evolve
from .stability import gronwall_run, refinement_consistency


EXIT_OK = 0
EXIT_ERROR = 2
EXIT_AUDIT_FAIL = 3
EXIT_IO = 4


def _parse_levels(text: str):
    try:
        levels = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--levels expects a comma-separated integer list, got {text!r}")
    return levels


def _out_dir(cfg, override) -> Path:
    out = Path(override) if override else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _render_run_figures(report, out: Path) -> None:
    from . import plots

    plots.plot_density_snapshots(report, out / "density.png")
    plots.plot_moments(report, out / "moments.png")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    consts = cfg.resolved_constants()
    audit_report = audit(cfg.kernel, cfg.frag, consts, cfg.audit_plan)
    out = _out_dir(cfg, args.out)
    if args.strict_hypotheses and not audit_report.all_pass:
        write_audit_json(audit_report, out / "audit.json")
        failing = [k for k, v in audit_report.verdicts.items() if v == "fail"]
        if audit_report.uniqueness_condition == "fail":
            failing.append("1+nu>mu")
        print(f"hypothesis audit failed ({', '.join(failing)}); see {out / 'audit.json'}", file=sys.stderr)
        return EXIT_AUDIT_FAIL

    tables = assemble(cfg.kernel, cfg.frag, cfg.grid, cfg.truncation, dust_policy=cfg.dust_policy)
    d0 = cfg.initial_density()
    report = evolve(tables, d0, cfg.t_end, cfg.times, cfg.ctrl, cfg.moment_orders)
    report.audit = audit_report
    report.config = cfg.canonical()

    write_moments_csv(report, out / "moments.csv")
    write_density_snapshots(report, out)
    write_report_json(report, out / "report.json")
    if not args.no_figures:
        _render_run_figures(report, out)
    print(
        f"run complete: {len(report.snapshots)} snapshots to t={cfg.t_end:g}, "
        f"mass-balance residual {report.mass_balance['max_abs_relative_residual']:.3e}, "
        f"artifacts in {out}"
    )
    return EXIT_OK


def cmd_check_hypotheses(args) -> int:
    cfg = load_config(args.config)
    consts = cfg.resolved_constants()
    report = audit(cfg.kernel, cfg.frag, consts, cfg.audit_plan)
    doc = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    print(doc)
    if args.out:
        out = _out_dir(cfg, args.out)
        write_audit_json(report, out / "audit.json")
    return EXIT_OK if report.all_pass else EXIT_AUDIT_FAIL


def cmd_moments(args) -> int:
    run_dir = Path(args.out)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        print(f"no report.json under {run_dir}", file=sys.stderr)
        return EXIT_IO
    doc = json.loads(report_path.read_text())
    snaps = doc["mass_balance"]["snapshots"]
    times = [s["t"] for s in snaps]
    orders = (
        sorted({0.0, 1.0} | {float(v) for v in args.orders.split(",")})
        if args.orders
        else [float(v) for v in doc["config"]["moment_orders"]]
    )
    densities = []
    for k, t in enumerate(times):
        path = run_dir / f"density_t{k}.csv"
        if not path.exists():
            print(f"missing snapshot file {path}", file=sys.stderr)
            return EXIT_IO
        densities.append(read_density_csv(path, t=t))
    series = MomentSeries.from_snapshots(densities, np.asarray(orders))
    header = ["t"] + [order_label(r) for r in orders]
    lines = [",".join(header)]
    for k, t in enumerate(times):
        lines.append(",".join([fmt(t)] + [fmt(series.column(r)[k]) for r in orders]))
    out_path = run_dir / "moments_recomputed.csv"
    out_path.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args.out)
    if args.levels:
        if cfg.initial_kind == "csv":
            raise ConfigError(
                "refinement studies need a closed-form initial profile; a CSV initial "
                "is tied to one grid and cannot be reprojected across levels"
            )
        levels = _parse_levels(args.levels)
        report = refinement_consistency(
            cfg.kernel,
            cfg.frag,
            cfg.initial_profile(),
            levels,
            cfg.t_end,
            x_min=cfg.grid.x_min,
            x_max=cfg.grid.x_max,
            mode=cfg.truncation,
            ctrl=cfg.ctrl,
            pivot_rule=cfg.grid.pivot_rule,
            dust_policy=cfg.dust_policy,
        )
        write_refinement_csv(report, out / "refinement.csv")
        if not args.no_figures:
            from . import plots

            plots.plot_refinement(report, out / "refinement.png")
        status = "converging" if report.converging else "NOT converging"
        orders = ", ".join(f"{o:.3g}" for o in report.orders)
        print(f"refinement study {status}; empirical orders: {orders}; artifacts in {out}")
        return EXIT_OK

    consts = cfg.resolved_constants()
    tables = assemble(cfg.kernel, cfg.frag, cfg.grid, cfg.truncation, dust_policy=cfg.dust_policy)
    d0 = cfg.initial_density()
    epsilon = cfg.epsilon if args.epsilon is None else float(args.epsilon)
    trace, _, _ = gronwall_run(
        tables, cfg.frag, d0, cfg.t_end, cfg.times, consts, epsilon, cfg.ctrl, cfg.tau_disc
    )
    write_gronwall_csv(trace, out / "gronwall.csv")
    if not args.no_figures:
        from . import plots

        plots.plot_gronwall(trace, out / "gronwall.png")
    verdict = "holds" if trace.holds else "VIOLATED"
    print(
        f"Gronwall bound {verdict} on {trace.times.size} samples "
        f"(epsilon={epsilon:g}, tau_disc={trace.tau_disc:g}); artifacts in {out}"
    )
    return EXIT_OK


def cmd_ladder(args) -> int:
    res = moment_ladder(args.mu, args.nu, args.rho0, args.delta)
    if not res.terminated:
        print(f"ladder not applicable: {res.reason} (mu={args.mu:g}, nu={args.nu:g})")
        return EXIT_OK
    seq = ", ".join(f"{r:g}" for r in res.sequence)
    print(f"sequence: [{seq}]")
    print(f"increment per step: {1.0 + args.nu - args.mu:g}")
    print(f"terminal integrable order: {res.terminal_order:g} (= 2 + nu - delta)")
    return EXIT_OK


def cmd_oracles(args) -> int:
    for name, case in ORACLE_CASES.items():
        marks = []
        if case.audit_fail_expected:
            marks.append("audit-fail-expected")
        if case.density is None:
            marks.append("moments-only")
        suffix = f" [{', '.join(marks)}]" if marks else ""
        n_note = ""
        if case.frag is not None:
            n_note = f" (N = {fragment_count(case.frag):g})"
        print(f"{name}: {case.description}{n_note}; valid for {case.validity}{suffix}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coagfrag",
        description="Sectional solver and verification suite for coagulation with multiple fragmentation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario and emit artifacts")
    run.add_argument("--config", required=True, help="path to the JSON configuration")
    run.add_argument("--out", help="output directory (overrides config output_dir)")
    run.add_argument(
        "--strict-hypotheses",
        action="store_true",
        help="exit 3 when the advisory hypothesis audit fails",
    )
    run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check-hypotheses", help="audit the configured kernels")
    chk.add_argument("--config", required=True)
    chk.add_argument("--out", help="also write audit.json into this directory")
    chk.set_defaults(func=cmd_check_hypotheses)

    mom = sub.add_parser("moments", help="recompute moments from emitted density CSVs")
    mom.add_argument("--out", required=True, help="directory of a previous run")
    mom.add_argument("--orders", help="comma-separated moment orders (default: from the run config)")
    mom.set_defaults(func=cmd_moments)

    cmp_ = sub.add_parser("compare", help="Gronwall twin-run or grid-refinement study")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--out", help="output directory (overrides config output_dir)")
    cmp_.add_argument("--epsilon", type=float, help="perturbation scale (overrides config)")
    cmp_.add_argument("--levels", help="comma-separated n_cells ladder; switches to refinement mode")
    cmp_.add_argument("--no-figures", action="store_true")
    cmp_.set_defaults(func=cmd_compare)

    lad = sub.add_parser("ladder", help="print the moment-integrability ladder")
    lad.add_argument("--mu", type=float, required=True)
    lad.add_argument("--nu", type=float, required=True)
    lad.add_argument("--rho0", type=float, default=1.0)
    lad.add_argument("--delta", type=float, default=0.05)
    lad.set_defaults(func=cmd_ladder)

    orc = sub.add_parser("oracles", help="list the named analytic fixtures")
    orc.set_defaults(func=cmd_oracles)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CoagFragError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
