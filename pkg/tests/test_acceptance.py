"""Acceptance suite: each test enforces one shipping criterion at its
stated tolerance and prints a one-line verdict."""

import json
import math
import time

import numpy as np
import pytest

from coagfrag.audit import FAIL, PASS, SamplePlan, audit
from coagfrag.cli import main
from coagfrag.grid import GridSpec, project
from coagfrag.kernels import (
    HypothesisConstants,
    breakage_partial_mass,
    eval_K,
    make_fragmentation,
    make_kernel,
    suggest_constants,
)
from coagfrag.observables import moment_ladder
from coagfrag.oracles import oracle_constant_coagulation
from coagfrag.solver import ControllerConfig, assemble, evolve
from coagfrag.stability import gronwall_run, refinement_consistency


def exp_profile(x):
    return np.exp(-np.asarray(x, dtype=float))


def _verdict(num: int, description: str, passed: bool, detail: str = "") -> None:
    tag = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{tag}] criterion {num}: {description}{suffix}")
    assert passed, f"criterion {num} failed: {description}{suffix}"


def test_criterion_1_constant_kernel_oracle():
    start = time.perf_counter()
    grid = GridSpec(1e-3, 1e3, 256)
    tables = assemble(make_kernel("constant", k0=1.0), None, grid)
    report = evolve(tables, project(exp_profile, grid), 1.0, np.linspace(0.0, 1.0, 5))
    elapsed = time.perf_counter() - start

    m0 = float(report.series.column(0.0)[-1])
    m0_ok = abs(m0 - 2.0 / 3.0) <= 0.01 * (2.0 / 3.0)
    exact = oracle_constant_coagulation(1.0, grid.pivots)
    l1_err = math.fsum((np.abs(report.snapshots[-1].values - exact) * grid.widths).tolist())
    l1_norm = math.fsum((exact * grid.widths).tolist())
    l1_ok = l1_err <= 0.02 * l1_norm
    runtime_ok = elapsed <= 30.0
    _verdict(
        1,
        "constant-kernel oracle: M0(1) within 1% of 2/3, L1 error <= 2%, runtime <= 30 s",
        m0_ok and l1_ok and runtime_ok,
        f"M0={m0:.6f}, relL1={l1_err / l1_norm:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_linear_binary_fragmentation_oracle():
    grid = GridSpec(1e-6, 1e3, 256)
    frag = make_fragmentation("power-law", s0=1.0, gamma=1.0, alpha=0.0)
    tables = assemble(None, frag, grid)
    report = evolve(tables, project(exp_profile, grid), 1.0, np.linspace(0.0, 1.0, 5))
    m0 = float(report.series.column(0.0)[-1])
    m0_ok = abs(m0 - 2.0) <= 0.01 * 2.0
    drift_ok = report.mass_balance["max_abs_relative_residual"] <= 1e-6
    _verdict(
        2,
        "linear binary fragmentation: M0(1) within 1% of 2, mass drift net of dust <= 1e-6",
        m0_ok and drift_ok,
        f"M0={m0:.6f}, drift={report.mass_balance['max_abs_relative_residual']:.2e}",
    )


def test_criterion_3_multiple_fragmentation_number_growth():
    grid = GridSpec(1e-6, 1e3, 256)
    frag = make_fragmentation("power-law", s0=1.0, gamma=1.0, alpha=-0.5)
    tables = assemble(None, frag, grid)
    times = np.linspace(0.0, 2.0, 5)
    report = evolve(tables, project(exp_profile, grid), 2.0, times)
    m0 = report.series.column(0.0)
    target = 1.0 + 2.0 * times
    rel = np.abs(m0 - target) / target
    _verdict(
        3,
        "multiple fragmentation (alpha=-0.5, N=3): M0(t) within 2% of 1+2t for t <= 2",
        bool(np.all(rel <= 0.02)),
        f"max rel dev {rel.max():.2e}",
    )


def test_criterion_4_breakage_mass_conservation():
    worst = 0.0
    for alpha in (-0.9, -0.5, 0.0):
        frag = make_fragmentation("power-law", s0=1.0, gamma=0.5, alpha=alpha)
        for y in np.geomspace(1e-4, 1e4, 100):
            worst = max(worst, abs(breakage_partial_mass(frag, y, 0.0, y) - y) / y)
    _verdict(
        4,
        "closed-form breakage mass integral reproduces y to 1e-12 (100 parents, 3 alphas)",
        worst <= 1e-12,
        f"worst rel err {worst:.2e}",
    )


def test_criterion_5_hypothesis_audit_fixtures():
    plan = SamplePlan()
    ok = True
    details = []

    for name, params in (("shear", {"k0": 1.0}), ("smoluchowski-modified", {"k0": 1.0, "c": 1.0})):
        kernel = make_kernel(name, **params)
        rep = audit(kernel, None, suggest_constants(kernel, None), plan)
        good = rep.verdicts["A1"] == PASS and rep.verdicts["A2"] == PASS
        ok &= good
        details.append(f"{name}: A1={rep.verdicts['A1']}, A2={rep.verdicts['A2']}")

    frag = make_fragmentation("power-law", s0=1.0, gamma=0.5, alpha=0.0)
    consts = suggest_constants(None, frag)
    good_consts = consts.nu == pytest.approx(-0.5) and consts.L_gamma == pytest.approx(2.0)
    rep = audit(None, frag, consts, plan)
    frag_good = all(rep.verdicts[h] == PASS for h in ("A3", "A4", "A5"))
    ok &= good_consts and frag_good
    details.append(f"powerlaw-frag: A3-A5 {'pass' if frag_good else 'fail'} (nu={consts.nu}, L={consts.L_gamma})")

    product = make_kernel("product-power", k0=1.0, mu1=1.0, mu2=1.0)
    rep = audit(product, None, HypothesisConstants(k1=1.0, mu=0.9), plan)
    wit_ok = rep.verdicts["A2"] == FAIL and len(rep.witnesses_for("A2")) > 0
    if wit_ok:
        w = rep.witnesses_for("A2")[0]
        x, y = w.points
        reproduced = float(eval_K(product, x, y))
        wit_ok = reproduced == pytest.approx(w.lhs, rel=1e-14) and w.lhs > w.rhs
    ok &= wit_ok
    details.append(f"product x*y: A2={rep.verdicts['A2']} with reproducible witness={wit_ok}")

    _verdict(5, "hypothesis audit on the named kernel fixtures", ok, "; ".join(details))


def test_criterion_6_moment_ladder():
    res = moment_ladder(mu=0.5, nu=-0.2, rho0=1.0, delta=0.05)
    seq_ok = res.sequence == pytest.approx([1.0, 1.3, 1.6], abs=1e-15)
    term_ok = res.terminal_order == pytest.approx(1.75, abs=1e-15)
    inc = np.diff(res.sequence)
    inc_ok = bool(np.all(np.abs(inc - 0.3) <= 1e-14))
    _verdict(
        6,
        "moment ladder (mu=0.5, nu=-0.2, rho0=1, delta=0.05) -> [1, 1.3, 1.6], terminal 1.75",
        seq_ok and term_ok and inc_ok,
        f"sequence={list(res.sequence)}, terminal={res.terminal_order}",
    )


def test_criterion_7_gronwall_contraction():
    grid = GridSpec(1e-3, 1e3, 256)
    kernel = make_kernel("constant", k0=1.0)
    frag = make_fragmentation("power-law", s0=0.1, gamma=1.0, alpha=0.0)
    tables = assemble(kernel, frag, grid)
    d0 = project(exp_profile, grid)
    consts = HypothesisConstants(k1=1.0, mu=0.0, m=0.1, lam=0.5, L_gamma=0.2, nu=0.0)
    times = np.linspace(0.0, 2.0, 20)

    trace, _, _ = gronwall_run(tables, frag, d0, 2.0, times, consts, epsilon=1e-3, tau_disc=0.05)
    bound_holds = trace.holds and trace.u[0] > 0.0

    trace0, _, _ = gronwall_run(tables, frag, d0, 2.0, times, consts, epsilon=0.0, tau_disc=0.05)
    zero_exact = bool(np.all(trace0.u == 0.0))

    _verdict(
        7,
        "Gronwall contraction (K=1, S=0.1x, alpha=0): u <= u0*exp(int phi)*1.05 at 20 samples; "
        "epsilon=0 gives u == 0 bit-exactly",
        bound_holds and zero_exact,
        f"max u/bound={np.max(trace.u / np.maximum(trace.bound, 1e-300)):.3f}, u0={trace.u[0]:.3e}",
    )


def test_criterion_8_grid_refinement_uniqueness_proxy():
    rep = refinement_consistency(
        make_kernel("constant", k0=1.0), None, exp_profile, (128, 256, 512), 1.0,
        ctrl=ControllerConfig(rtol=1e-8),
    )
    order_ok = rep.converging and all(o >= 1.0 for o in rep.orders)
    _verdict(
        8,
        "refinement 128->256->512 on the constant-kernel scenario: L1 distances drop at order >= 1",
        order_ok,
        f"distances={[f'{d:.3e}' for d in rep.distances]}, orders={[f'{o:.2f}' for o in rep.orders]}",
    )


def test_criterion_9_determinism_bit_identical(tmp_path):
    doc = {
        "kernel": {"family": "constant", "k0": 1.0},
        "fragmentation": {"family": "powerlaw-frag", "s0": 0.5, "gamma": 1.0, "alpha": -0.5},
        "grid": {"x_min": 1e-3, "x_max": 1e3, "n_cells": 64},
        "time": {"t_end": 0.5, "snapshots": 3},
        "audit": {"n_points": 1000, "n_pairs": 500},
        "seed": 42,
    }
    cfg = tmp_path / "fixture.json"
    cfg.write_text(json.dumps(doc))
    artifacts = ["moments.csv", "report.json"] + [f"density_t{k}.csv" for k in range(3)]
    payloads = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["run", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        payloads.append({name: (out / name).read_bytes() for name in artifacts})
    identical = all(payloads[0][name] == payloads[1][name] for name in artifacts)
    _verdict(
        9,
        "repeated runs emit bit-identical CSV/JSON artifacts",
        identical,
        f"{len(artifacts)} artifacts compared",
    )
