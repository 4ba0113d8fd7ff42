"""Bit-exact result emission: delimited files and the JSON report.

All floating-point values are written with 17 significant digits so
artifacts round-trip exactly and identical runs produce byte-identical
files.  No timestamps or wall-clock data enter any artifact.
"""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy as np

from .grid import write_density_csv
from .solver import RunReport
from .stability import GronwallTrace, RefinementReport


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def order_label(r: float) -> str:
    return f"M{r:g}"


def write_moments_csv(report: RunReport, path) -> None:
    orders = [float(r) for r in report.series.orders]
    named = [0.0, 1.0] + [r for r in orders if r not in (0.0, 1.0)]
    header = ["t"] + [order_label(r) for r in named] + ["xnorm", "overflow_cum", "dust_cum"]
    lines = [",".join(header)]
    for k, t in enumerate(report.times):
        row = [fmt(t)]
        row += [fmt(report.series.column(r)[k]) for r in named]
        row += [fmt(report.xnorm[k]), fmt(report.overflow_cum[k]), fmt(report.dust_cum[k])]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_density_snapshots(report: RunReport, out_dir) -> list:
    out_dir = Path(out_dir)
    paths = []
    for k, snap in enumerate(report.snapshots):
        p = out_dir / f"density_t{k}.csv"
        write_density_csv(snap, p)
        paths.append(p)
    return paths


def versions_block() -> dict:
    import matplotlib
    import scipy

    from . import __version__

    return {
        "coagfrag": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "python": platform.python_version(),
    }


def mass_balance_block(report: RunReport) -> dict:
    m1 = report.series.column(1.0)
    snaps = []
    for k, t in enumerate(report.times):
        snaps.append(
            {
                "t": float(t),
                "m1": float(m1[k]),
                "overflow_cum": float(report.overflow_cum[k]),
                "dust_cum": float(report.dust_cum[k]),
                "residual": report.mass_balance["residual"][k],
                "relative_residual": report.mass_balance["relative_residual"][k],
            }
        )
    return {
        "initial_mass": report.mass_balance["initial_mass"],
        "max_abs_relative_residual": report.mass_balance["max_abs_relative_residual"],
        "snapshots": snaps,
    }


def write_report_json(report: RunReport, path) -> dict:
    doc = {
        "config": report.config,
        "audit": report.audit.as_dict() if report.audit is not None else None,
        "mass_balance": mass_balance_block(report),
        "steps": report.steps,
        "versions": versions_block(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


GRONWALL_HEADER = "t,u,phi,integral_phi,bound,margin,verdict"


def write_gronwall_csv(trace: GronwallTrace, path) -> None:
    lines = [GRONWALL_HEADER]
    verdicts = trace.verdicts
    for k, t in enumerate(trace.times):
        lines.append(
            ",".join(
                [
                    fmt(t), fmt(trace.u[k]), fmt(trace.phi[k]), fmt(trace.integral_phi[k]),
                    fmt(trace.bound[k]), fmt(trace.margin[k]),
                    "pass" if verdicts[k] else "fail",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_refinement_csv(report: RefinementReport, path) -> None:
    lines = ["n_coarse,n_fine,l1_distance,order"]
    for k in range(len(report.distances)):
        order = report.orders[k - 1] if k >= 1 else float("nan")
        lines.append(
            ",".join(
                [
                    str(report.levels[k]), str(report.levels[k + 1]),
                    fmt(report.distances[k]),
                    fmt(order) if k >= 1 else "",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_audit_json(audit_report, path) -> None:
    Path(path).write_text(json.dumps(audit_report.as_dict(), indent=2, sort_keys=True) + "\n")
