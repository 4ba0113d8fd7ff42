import math

import numpy as np
import pytest

from coagfrag.errors import GridMismatchError, ProjectionError
from coagfrag.grid import (
    Density,
    GridSpec,
    monodisperse_profile,
    project,
    read_density_csv,
    require_same_grid,
    weighted_norm,
    write_density_csv,
)


def exp_profile(x):
    return np.exp(-np.asarray(x, dtype=float))


def exact_mass_exp(a, b):
    # integral of x e^-x over [a, b]
    return (1.0 + a) * math.exp(-a) - (1.0 + b) * math.exp(-b)


def test_grid_geometry():
    g = GridSpec(1e-3, 1e3, 128)
    assert g.edges[0] == pytest.approx(1e-3)
    assert g.edges[-1] == pytest.approx(1e3)
    assert np.all(np.diff(g.edges) > 0.0)
    assert np.all((g.pivots > g.edges[:-1]) & (g.pivots < g.edges[1:]))
    assert g.ratio == pytest.approx((1e6) ** (1.0 / 128))
    assert np.all(g.widths > 0.0)


def test_grid_guards():
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 64)
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.5, 64)
    with pytest.raises(ValueError):
        GridSpec(1e-3, 1e3, 4)
    # ratio above 4
    with pytest.raises(ValueError, match="ratio"):
        GridSpec(1e-8, 1e8, 8)
    with pytest.raises(ValueError):
        GridSpec(1e-3, 1e3, 64, pivot_rule="harmonic")


def test_geometric_pivot_rule():
    g = GridSpec(1e-2, 1e2, 32, pivot_rule="geometric")
    assert np.allclose(g.pivots, np.sqrt(g.edges[:-1] * g.edges[1:]))


def test_project_zero_profile():
    g = GridSpec(1e-3, 1e3, 64)
    d = project(lambda x: 0.0 * np.asarray(x), g)
    assert np.all(d.values == 0.0)


def test_project_exponential_mass_matches_analytic():
    g = GridSpec(1e-3, 50.0, 128)
    d = project(exp_profile, g)
    mass = math.fsum((g.pivots * d.values * g.widths).tolist())
    exact = exact_mass_exp(1e-3, 50.0)
    # midpoint quadrature on this grid carries an intrinsic ~1.2e-3 error
    assert abs(mass - exact) <= 2e-3
    # quadrature reproduces the analytic cell averages of e^-x to tolerance
    avg_exact = (np.exp(-g.edges[:-1]) - np.exp(-g.edges[1:])) / g.widths
    assert np.allclose(d.values, avg_exact, rtol=1e-9)


def test_project_monodisperse_single_cell():
    g = GridSpec(1e-3, 1e3, 64)
    d = project(monodisperse_profile(g, 1.0, number=2.5), g)
    nz = np.nonzero(d.values)[0]
    assert nz.size == 1
    i = nz[0]
    assert d.values[i] * g.widths[i] == pytest.approx(2.5, rel=1e-12)


def test_project_non_integrable_raises():
    g = GridSpec(1e-3, 1.0, 16)

    def bad(x):
        return float("nan")

    with pytest.raises(ProjectionError, match="cell 0"):
        project(bad, g)


def test_project_linearity():
    g = GridSpec(1e-3, 50.0, 64)
    phi1 = exp_profile
    phi2 = lambda x: np.exp(-0.5 * np.asarray(x)) * np.asarray(x)
    a = 3.7
    lhs = project(lambda x: a * phi1(x) + phi2(x), g).values
    rhs = a * project(phi1, g).values + project(phi2, g).values
    scale = np.abs(rhs).max()
    assert np.all(np.abs(lhs - rhs) <= 1e-9 * scale)


def test_weighted_norm_values():
    g = GridSpec(1e-3, 100.0, 256)
    assert weighted_norm(project(lambda x: 0.0 * np.asarray(x), g)) == 0.0
    d = project(exp_profile, g)
    # M0 + M1 = 2 for e^-x
    assert weighted_norm(d) == pytest.approx(2.0, rel=0.01)


def test_weighted_norm_single_cell_hand_value():
    # one cell with v=2, width 0.5, pivot 1 -> (1+1)*2*0.5 = 2
    g = GridSpec(0.75, 1.25, 8)
    i = g.containing_cell(1.0)
    vals = np.zeros(g.n_cells)
    vals[i] = 2.0
    d = Density(g, vals)
    expected = (1.0 + g.pivots[i]) * 2.0 * g.widths[i]
    assert weighted_norm(d) == pytest.approx(expected, rel=1e-14)


def test_weighted_norm_refinement_is_second_order():
    exact = exact_mass_exp(1e-3, 50.0) + (math.exp(-1e-3) - math.exp(-50.0))
    errs = []
    for n in (64, 128, 256):
        g = GridSpec(1e-3, 50.0, n)
        errs.append(abs(weighted_norm(project(exp_profile, g)) - exact))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_density_validation():
    g = GridSpec(1e-3, 1e3, 16)
    with pytest.raises(ValueError):
        Density(g, np.ones(5))
    with pytest.raises(ValueError):
        Density(g, np.full(16, np.inf))
    vals = np.ones(16)
    vals[3] = -1e-3
    with pytest.raises(ValueError, match="undershoot"):
        Density(g, vals)
    # tolerated round-off band passes
    vals[3] = -0.5e-12
    Density(g, vals)


def test_require_same_grid():
    a = Density(GridSpec(1e-3, 1e3, 16), np.zeros(16))
    b = Density(GridSpec(1e-3, 1e3, 32), np.zeros(32))
    with pytest.raises(GridMismatchError):
        require_same_grid(a, b)


def test_density_csv_roundtrip(tmp_path):
    g = GridSpec(1e-3, 1e3, 32)
    d = project(exp_profile, g)
    path = tmp_path / "density.csv"
    write_density_csv(d, path)
    header = path.read_text().splitlines()[0]
    assert header == "cell_index,edge_lo,edge_hi,pivot,value"
    back = read_density_csv(path)
    assert back.grid.same_as(g)
    assert np.array_equal(back.values, d.values)
    # writing the reloaded density reproduces the file byte for byte
    path2 = tmp_path / "density2.csv"
    write_density_csv(back, path2)
    assert path.read_bytes() == path2.read_bytes()
