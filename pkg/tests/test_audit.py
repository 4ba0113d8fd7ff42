import numpy as np
import pytest

from coagfrag.audit import FAIL, PASS, SAMPLED_PASS, SKIPPED, AuditReport, SamplePlan, Witness, audit
from coagfrag.errors import ConfigError
from coagfrag.kernels import (
    HypothesisConstants,
    eval_K,
    eval_S,
    eval_b,
    make_fragmentation,
    make_kernel,
    suggest_constants,
)

PLAN = SamplePlan(n_points=1024, n_pairs=2000, n_inner=32, seed=7)

POWERLAW_FRAG = make_fragmentation("power-law", s0=1.0, gamma=0.5, alpha=0.0)


def test_worked_example_passes_a3_to_a5():
    consts = HypothesisConstants(k1=1.0, mu=0.0, m=1.0, lam=0.5, L_gamma=2.0, nu=-0.5)
    rep = audit(make_kernel("constant", k0=1.0), POWERLAW_FRAG, consts, PLAN)
    assert rep.verdicts["A3"] == PASS
    assert rep.verdicts["A4"] == PASS
    assert rep.verdicts["A5"] == PASS
    assert rep.uniqueness_condition == PASS
    assert rep.all_pass


def test_constant_kernel_a2_trivially_passes():
    consts = HypothesisConstants(k1=1.0, mu=0.0)
    rep = audit(make_kernel("constant", k0=1.0), None, consts, PLAN)
    assert rep.verdicts["A1"] == PASS
    assert rep.verdicts["A2"] == PASS
    assert rep.verdicts["A3"] == SKIPPED
    assert rep.verdicts["A5"] == SKIPPED


def test_shear_and_smoluchowski_pass_with_suggested_constants():
    for name, params in (("shear", {"k0": 2.0}), ("smoluchowski-modified", {"k0": 1.0, "c": 0.5})):
        kernel = make_kernel(name, **params)
        consts = suggest_constants(kernel, None)
        rep = audit(kernel, None, consts, PLAN)
        assert rep.verdicts["A1"] == PASS
        assert rep.verdicts["A2"] == PASS
        assert rep.basis["A2"] == "closed-form"


def test_product_kernel_fails_a2_with_witness():
    kernel = make_kernel("product-power", k0=1.0, mu1=1.0)
    consts = HypothesisConstants(k1=1.0, mu=0.9)
    rep = audit(kernel, None, consts, PLAN)
    assert rep.verdicts["A2"] == FAIL
    wits = rep.witnesses_for("A2")
    assert wits
    # witnesses are sound: re-evaluation reproduces lhs > rhs
    for w in wits:
        x, y = w.points
        lhs = eval_K(kernel, x, y)
        rhs = consts.k1**2 * (1.0 + x) ** consts.mu * (1.0 + y) ** consts.mu
        assert lhs == pytest.approx(w.lhs, rel=1e-14)
        assert rhs == pytest.approx(w.rhs, rel=1e-14)
        assert lhs > rhs
    # the violation needs at least one large size coordinate
    assert all(max(w.points) >= 1e2 for w in wits)


def test_a4_failure_witness_for_linear_rate():
    frag = make_fragmentation("power-law", s0=1.0, gamma=1.0, alpha=0.0)
    consts = HypothesisConstants(m=0.1, lam=0.5, L_gamma=2.0, nu=0.0)
    rep = audit(None, frag, consts, PLAN)
    assert rep.verdicts["A4"] == FAIL
    w = rep.witnesses_for("A4")[0]
    assert eval_S(frag, w.points[0]) == pytest.approx(w.lhs, rel=1e-14)
    assert w.lhs > w.rhs


def test_a5_failure_for_positive_alpha():
    frag = make_fragmentation("power-law", s0=1.0, gamma=0.5, alpha=0.5)
    consts = HypothesisConstants(m=1.0, lam=0.5, L_gamma=2.5, nu=-0.5)
    rep = audit(None, frag, consts, PLAN)
    assert rep.verdicts["A5"] == FAIL
    w = rep.witnesses_for("A5")[0]
    x, y = w.points
    assert eval_b(frag, x, y) * eval_S(frag, x) == pytest.approx(w.lhs, rel=1e-13)
    assert w.lhs < w.rhs


def test_uniqueness_condition_comparison():
    consts_bad = HypothesisConstants(k1=1.0, mu=7.0 / 9.0, m=1.0, lam=0.5, L_gamma=2.0, nu=-0.5)
    rep = audit(make_kernel("shear", k0=1.0), POWERLAW_FRAG, consts_bad, PLAN)
    assert rep.uniqueness_condition == FAIL
    assert not rep.all_pass


def test_monotonicity_enlarging_constants_never_flips_pass():
    kernel = make_kernel("shear", k0=1.0)
    base = suggest_constants(kernel, POWERLAW_FRAG)
    rep0 = audit(kernel, POWERLAW_FRAG, base, PLAN)
    bigger = HypothesisConstants(
        k1=base.k1 * 10.0, mu=base.mu, m=base.m * 10.0, lam=base.lam,
        L_gamma=base.L_gamma, nu=base.nu,
    )
    rep1 = audit(kernel, POWERLAW_FRAG, bigger, PLAN)
    for name in ("A1", "A2", "A3", "A4", "A5"):
        if rep0.verdicts[name] in (PASS, SAMPLED_PASS):
            assert rep1.verdicts[name] in (PASS, SAMPLED_PASS)


def test_custom_table_sampled_verdict():
    kernel = make_kernel(
        "custom-table",
        x_nodes=np.geomspace(1e-6, 1e6, 17),
        values=np.ones((17, 17)) * 3.0,
    )
    # k1^2 = 4 > max(table) = 3: closed-form bound applies even for tables
    rep = audit(kernel, None, HypothesisConstants(k1=2.0, mu=0.0), PLAN)
    assert rep.verdicts["A2"] == PASS
    # a tight k1 forces the sampled path
    rep2 = audit(kernel, None, HypothesisConstants(k1=1.7, mu=0.1), PLAN)
    assert rep2.verdicts["A2"] in (SAMPLED_PASS, FAIL)


def test_missing_constants_skips_envelope_checks():
    rep = audit(make_kernel("constant", k0=1.0), None, HypothesisConstants(), PLAN)
    assert rep.verdicts["A1"] == PASS
    assert rep.verdicts["A2"] == SKIPPED
    assert rep.basis["A2"] == "no-constants"


def test_sample_plan_guards():
    with pytest.raises(ConfigError):
        SamplePlan(n_points=100)
    with pytest.raises(ConfigError):
        SamplePlan(x_min=1.0, x_max=0.5)


@pytest.mark.parametrize(
    "gamma,alpha,mu",
    [
        (0.5, 0.0, 0.0),     # 1+nu = 0.5 > 0
        (0.5, -0.5, 0.4),    # 0.5 > 0.4
        (0.5, 0.0, 0.5),     # 0.5 > 0.5 is false
        (0.3, -0.9, 7.0 / 9.0),  # 0.3 < 0.778
        (0.9, 0.0, 0.8),     # 0.9 > 0.8
    ],
)
def test_worked_example_admissibility_iff_gamma_exceeds_mu(gamma, alpha, mu):
    # with nu = gamma-1 the uniqueness condition 1+nu > mu reads gamma > mu
    frag = make_fragmentation("power-law", s0=1.0, gamma=gamma, alpha=alpha)
    base = suggest_constants(None, frag)
    consts = HypothesisConstants(
        k1=1.0, mu=mu, m=base.m, lam=base.lam, L_gamma=base.L_gamma, nu=base.nu
    )
    rep = audit(make_kernel("constant", k0=1.0), frag, consts, PLAN)
    for h in ("A3", "A4", "A5"):
        assert rep.verdicts[h] == PASS
    assert (rep.uniqueness_condition == PASS) == (gamma > mu)


def test_report_as_dict_roundtrip_fields():
    consts = HypothesisConstants(k1=1.0, mu=0.0, m=1.0, lam=0.5, L_gamma=2.0, nu=-0.5)
    rep = audit(make_kernel("constant", k0=1.0), POWERLAW_FRAG, consts, PLAN)
    doc = rep.as_dict()
    assert set(doc["verdicts"]) == {"A1", "A2", "A3", "A4", "A5"}
    assert doc["all_pass"] is True
    assert doc["constants"]["lambda"] == 0.5
