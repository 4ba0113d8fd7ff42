import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coagfrag.grid import Density, GridSpec, project
from coagfrag.observables import (
    LadderResult,
    MomentSeries,
    TrendReport,
    integrability_probe,
    moment_ladder,
    moments,
    trapezoid_running,
)


def test_moments_zero_density():
    g = GridSpec(1e-3, 1e3, 32)
    d = Density(g, np.zeros(32))
    assert np.all(moments(d, [0.0, 1.0, 2.5]) == 0.0)


def test_moments_exponential_gamma_integrals():
    g = GridSpec(1e-3, 100.0, 256)
    d = project(lambda x: np.exp(-np.asarray(x, dtype=float)), g)
    m = moments(d, [0.0, 1.0, 2.0])
    assert m[0] == pytest.approx(1.0, rel=0.01)
    assert m[1] == pytest.approx(1.0, rel=0.01)
    assert m[2] == pytest.approx(2.0, rel=0.01)


def test_moments_single_cell_every_order():
    # one cell with v=3, width 2, pivot 1 -> M_r = 6 for every r
    g = GridSpec(0.5, 2.0, 8)
    i = np.argmin(np.abs(g.pivots - 1.0))
    pivot = g.pivots[i]
    vals = np.zeros(8)
    vals[i] = 3.0
    d = Density(g, vals)
    for r in (0.0, 0.7, 1.0, 2.0):
        assert moments(d, [r])[0] == pytest.approx(3.0 * g.widths[i] * pivot**r, rel=1e-14)


def test_moments_rejects_negative_order():
    g = GridSpec(1e-3, 1e3, 16)
    with pytest.raises(ValueError):
        moments(Density(g, np.ones(16)), [-0.5])


def test_ladder_worked_example():
    res = moment_ladder(mu=0.5, nu=-0.2, rho0=1.0, delta=0.05)
    assert res.terminated
    assert res.sequence == pytest.approx([1.0, 1.3, 1.6], abs=1e-15)
    assert res.terminal_order == pytest.approx(1.75, abs=1e-15)
    diffs = np.diff(res.sequence)
    assert np.all(np.abs(diffs - 0.3) <= 1e-14)


def test_ladder_immediate_termination():
    res = moment_ladder(mu=0.0, nu=0.0, rho0=1.0, delta=0.1)
    assert res.sequence == (1.0,)
    assert res.terminal_order == pytest.approx(1.9)


def test_ladder_condition_violated():
    res = moment_ladder(mu=7.0 / 9.0, nu=-0.5, rho0=1.0, delta=0.05)
    assert not res.terminated
    assert res.terminal_order is None
    assert "1+nu>mu" in res.reason


def test_ladder_preconditions():
    with pytest.raises(ValueError):
        moment_ladder(mu=1.0, nu=0.0, rho0=1.0, delta=0.1)
    with pytest.raises(ValueError):
        moment_ladder(mu=0.5, nu=-1.0, rho0=1.0, delta=0.1)
    with pytest.raises(ValueError):
        moment_ladder(mu=0.5, nu=0.0, rho0=0.4, delta=0.1)
    with pytest.raises(ValueError):
        moment_ladder(mu=0.5, nu=0.0, rho0=1.0, delta=0.0)


@settings(max_examples=100, deadline=None)
@given(
    mu=st.floats(0.0, 0.99, allow_nan=False),
    nu=st.floats(-0.99, 2.0, allow_nan=False),
    rho0=st.floats(1.0, 3.0, allow_nan=False),
    delta=st.floats(1e-3, 0.5, allow_nan=False),
)
def test_ladder_increments_exact(mu, nu, rho0, delta):
    if rho0 <= mu or 1.0 + nu <= mu:
        return
    res = moment_ladder(mu, nu, rho0, delta)
    assert res.terminated
    inc = 1.0 + nu - mu
    for a, b in zip(res.sequence, res.sequence[1:]):
        assert abs((b - a) - inc) <= 1e-14
    # exact re-derivation of the bootstrap in rational arithmetic
    mu_f, nu_f = Fraction(mu), Fraction(nu)
    seq = [Fraction(rho0)]
    while seq[-1] - mu_f < 1:
        seq.append(seq[-1] + 1 + nu_f - mu_f)
    assert res.sequence == tuple(float(s) for s in seq)
    assert res.terminal_order == float(2 + nu_f - Fraction(delta))


def test_trapezoid_running_linear_exact():
    t = np.linspace(0.0, 2.0, 9)
    vals = 1.0 + t
    out = trapezoid_running(t, vals)
    assert np.allclose(out, t + 0.5 * t**2, rtol=1e-14)


def _series(times, m0, m1):
    orders = np.array([0.0, 1.0])
    values = np.column_stack([m0, m1])
    return MomentSeries(orders=orders, times=np.asarray(times, float), values=values)


def test_series_monotone_integral_and_columns():
    t = np.linspace(0.0, 1.0, 11)
    s = _series(t, np.ones_like(t), 2.0 * np.ones_like(t))
    i0 = s.running_integral(0.0)
    assert np.all(np.diff(i0) >= 0.0)
    assert i0[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        s.column(2.0)


def test_series_requires_m0_m1():
    with pytest.raises(ValueError):
        MomentSeries(orders=np.array([0.0, 2.0]))


def test_probe_constant_mass():
    t = np.linspace(0.0, 2.0, 21)
    s = _series(t, 2.0 / (t + 2.0), np.ones_like(t))
    rep = integrability_probe(s, 1.0)
    assert rep.integral_final == pytest.approx(2.0, rel=1e-12)
    assert rep.half_time_ratio == pytest.approx(2.0, rel=1e-12)
    assert not rep.fast_growth


def test_probe_linear_number_growth():
    t = np.linspace(0.0, 2.0, 41)
    s = _series(t, 1.0 + t, np.ones_like(t))
    rep = integrability_probe(s, 0.0)
    assert rep.integral_final == pytest.approx(2.0 + 2.0, rel=1e-12)
    assert not rep.fast_growth


def test_probe_zero_density_series():
    t = np.linspace(0.0, 1.0, 5)
    s = _series(t, np.zeros_like(t), np.zeros_like(t))
    rep = integrability_probe(s, 0.0)
    assert rep.integral_final == 0.0
    assert rep.half_time_ratio == 1.0


def test_moment_refinement_convergence():
    errs = []
    for n in (64, 128, 256):
        g = GridSpec(1e-3, 100.0, n)
        d = project(lambda x: np.exp(-np.asarray(x, dtype=float)), g)
        errs.append(abs(moments(d, [2.0])[0] - 2.0))
    assert errs[0] / errs[1] >= 3.0
    assert errs[1] / errs[2] >= 3.0
