"""Empirical check of the uniqueness mechanism: Gronwall contraction.

Two densities start from the same profile (one epsilon-perturbed with a
zero-net-mass shape) and evolve with identical solver settings.  The
weighted-norm distance u(t) is then compared against the bound
u(0)*exp(int_0^t phi), with the coefficient assembled from the runs' own
moments:

    phi(s) = phi_f(s) + phi_g(s) + L_frag,
    phi_h(s) = 2^(1+mu) k1^2 [M_0(h(s)) + M_{1+mu}(h(s))],
    L_frag = m*N.

The continuum bound is exact; a configurable discretization allowance
tau_disc absorbs the truncation error of the sectional scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridMismatchError
from .grid import Density, GridSpec, project, require_same_grid
from .kernels import CoagulationKernel, FragmentationSpec, HypothesisConstants, fragment_count
from .observables import trapezoid_running
from .solver import ControllerConfig, OperatorTables, RunReport, assemble, evolve


def distance(f: Density, g: Density) -> float:
    """Weighted-norm distance sum_i (1+p_i) |v_f - v_g| w_i."""
    require_same_grid(f, g)
    grid = f.grid
    terms = (1.0 + grid.pivots) * np.abs(f.values - g.values) * grid.widths
    return math.fsum(terms.tolist())


def perturbed_density(d0: Density, epsilon: float) -> Density:
    """Multiply by 1 + epsilon*shape with shape = sin(log x) recentered
    to zero net mass, so the perturbation does not offset M1."""
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    g = d0.grid
    shape = np.sin(np.log(g.pivots))
    mass_weights = g.pivots * d0.values * g.widths
    total = math.fsum(mass_weights.tolist())
    if total > 0.0:
        shape = shape - math.fsum((mass_weights * shape).tolist()) / total
    return Density(g, d0.values * (1.0 + epsilon * shape), d0.t)


@dataclass
class GronwallTrace:
    """Distance, coefficient, and bound sampled on the snapshot schedule."""

    times: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    integral_phi: np.ndarray
    bound: np.ndarray
    margin: np.ndarray
    tau_disc: float
    epsilon: float
    constants: HypothesisConstants
    l_frag: float

    @property
    def verdicts(self) -> np.ndarray:
        return self.u <= self.bound * (1.0 + self.tau_disc)

    @property
    def holds(self) -> bool:
        return bool(np.all(self.verdicts))


def _phi_half(series, mu: float, k1: float) -> np.ndarray:
    m0 = series.column(0.0)
    m1mu = series.column(1.0 + mu)
    return 2.0 ** (1.0 + mu) * k1 * k1 * (m0 + m1mu)


def gronwall_run(
    tables: OperatorTables,
    frag: FragmentationSpec | None,
    d0: Density,
    t_end: float,
    output_times,
    consts: HypothesisConstants,
    epsilon: float,
    ctrl: ControllerConfig = ControllerConfig(),
    tau_disc: float = 0.05,
) -> tuple[GronwallTrace, RunReport, RunReport]:
    """Evolve the twin scenario and assemble the contraction trace.

    Needs k1 and mu (and m when fragmentation is present); missing
    constants raise ConfigError instructing to run the audit first.
    """
    if consts.k1 is None or consts.mu is None:
        raise ConfigError(
            "Gronwall coefficient needs k1 and mu; declare them or run check-hypotheses/suggest"
        )
    l_frag = 0.0
    if tables.has_fragmentation:
        if frag is None:
            raise ConfigError("fragmentation tables require the fragmentation spec for N")
        if consts.m is None:
            raise ConfigError(
                "Gronwall coefficient needs m when fragmentation is present; declare it or run the audit"
            )
        l_frag = consts.m * fragment_count(frag)

    g0 = perturbed_density(d0, epsilon)
    orders = tuple(sorted({0.0, 1.0, 1.0 + consts.mu}))
    rep_f = evolve(tables, d0, t_end, output_times, ctrl, orders)
    rep_g = evolve(tables, g0, t_end, output_times, ctrl, orders)

    u = np.array([distance(f, g) for f, g in zip(rep_f.snapshots, rep_g.snapshots)])
    phi = _phi_half(rep_f.series, consts.mu, consts.k1) + _phi_half(
        rep_g.series, consts.mu, consts.k1
    ) + l_frag
    integral_phi = trapezoid_running(rep_f.times, phi)
    bound = u[0] * np.exp(integral_phi)
    margin = bound * (1.0 + tau_disc) - u
    trace = GronwallTrace(
        times=rep_f.times,
        u=u,
        phi=phi,
        integral_phi=integral_phi,
        bound=bound,
        margin=margin,
        tau_disc=tau_disc,
        epsilon=epsilon,
        constants=consts,
        l_frag=l_frag,
    )
    return trace, rep_f, rep_g


def l1_distance(a: Density, b: Density) -> float:
    """Unweighted L1 distance between two piecewise-constant densities.

    The grids must share the same span; the integration runs on the
    merged edge set.  Note the piecewise-constant representations of one
    smooth function on two different resolutions already differ at
    O(width); use :func:`restrict` first to compare solution content
    across nested resolutions.
    """
    ga, gb = a.grid, b.grid
    if not (ga.x_min == gb.x_min and ga.x_max == gb.x_max):
        raise GridMismatchError("L1 comparison needs grids covering the same span")
    edges = np.union1d(ga.edges, gb.edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    ia = np.clip(np.searchsorted(ga.edges, mids, side="right") - 1, 0, ga.n_cells - 1)
    ib = np.clip(np.searchsorted(gb.edges, mids, side="right") - 1, 0, gb.n_cells - 1)
    terms = np.abs(a.values[ia] - b.values[ib]) * widths
    return math.fsum(terms.tolist())


def restrict(fine: Density, coarse_grid: GridSpec) -> Density:
    """Conservative restriction of a fine-grid density to a coarser grid.

    Requires nested grids (same span, cell count an integer multiple);
    coarse values are width-weighted averages of their child cells, so
    integrals over coarse cells are preserved exactly.
    """
    gf = fine.grid
    if not (gf.x_min == coarse_grid.x_min and gf.x_max == coarse_grid.x_max):
        raise GridMismatchError("restriction needs grids covering the same span")
    if gf.n_cells % coarse_grid.n_cells != 0:
        raise GridMismatchError(
            f"restriction needs nested cell counts, got {gf.n_cells} onto {coarse_grid.n_cells}"
        )
    k = gf.n_cells // coarse_grid.n_cells
    if k == 1:
        return Density(coarse_grid, fine.values, fine.t)
    cell_int = (fine.values * gf.widths).reshape(coarse_grid.n_cells, k).sum(axis=1)
    return Density(coarse_grid, cell_int / coarse_grid.widths, fine.t)


@dataclass
class RefinementReport:
    """Successive-level distances at t_end with an empirical order estimate."""

    levels: tuple
    distances: tuple
    orders: tuple
    converging: bool

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "distances": list(self.distances),
            "orders": list(self.orders),
            "converging": self.converging,
        }


def refinement_consistency(
    kernel: CoagulationKernel | None,
    frag: FragmentationSpec | None,
    profile,
    levels,
    t_end: float,
    x_min: float = 1e-3,
    x_max: float = 1e3,
    mode: str = "conservative",
    ctrl: ControllerConfig = ControllerConfig(),
    pivot_rule: str = "arithmetic",
    dust_policy: str = "remove",
) -> RefinementReport:
    """Evolve the same scenario on a ladder of grids and compare limits.

    Successive levels are compared after conservative restriction of the
    finer solution onto the coarser grid (exact for nested cell
    averages), so the distances measure solution content rather than the
    O(width) piecewise-constant representation gap.  All discrete paths
    must approach one limit; the report flags non-convergence when
    successive distances fail to decrease.
    """
    levels = tuple(int(n) for n in levels)
    if len(levels) < 3:
        raise ValueError("refinement study needs at least 3 levels")
    finals = []
    for n in levels:
        grid = GridSpec(x_min, x_max, n, pivot_rule)
        tables = assemble(kernel, frag, grid, mode, dust_policy=dust_policy)
        d0 = project(profile, grid)
        times = np.array([0.0, t_end]) if t_end > 0.0 else np.array([0.0])
        rep = evolve(tables, d0, t_end, times, ctrl)
        finals.append(rep.snapshots[-1])
    dists = []
    for a, b in zip(finals, finals[1:]):
        if b.grid.n_cells % a.grid.n_cells == 0:
            dists.append(l1_distance(a, restrict(b, a.grid)))
        else:
            dists.append(l1_distance(a, b))
    dists = tuple(dists)
    orders = []
    for k in range(len(dists) - 1):
        h_ratio = levels[k + 1] / levels[k]
        if h_ratio > 1.0 and dists[k + 1] > 0.0 and dists[k] > 0.0:
            orders.append(math.log(dists[k] / dists[k + 1]) / math.log(h_ratio))
        else:
            orders.append(math.inf)
    converging = all(b < a for a, b in zip(dists, dists[1:])) or all(d == 0.0 for d in dists)
    return RefinementReport(
        levels=levels, distances=dists, orders=tuple(orders), converging=converging
    )
