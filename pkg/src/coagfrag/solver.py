"""Conservative sectional discretization and adaptive explicit time stepping.

The four right-hand-side terms (coagulation birth/death, fragmentation
birth/death) are assembled once into operator tables on the grid pivots:

* coagulation: every unordered pivot pair (i, j) is an event channel
  with rate K(p_i,p_j) w_i w_j (halved on the diagonal); the new particle
  of size p_i + p_j is split between the two pivots bracketing it with
  weights that conserve mass exactly (and number too, except above the
  last pivot where only mass can be preserved and the number defect is
  reported);
* fragmentation: per-cell birth numbers come from the closed-form
  partial-mass integral of the breakage function divided by the target
  pivot, which makes the parent-mass balance exact up to the tracked
  dust flux below x_min.

Time integration uses the Bogacki-Shampine embedded 2(3) pair with the
local error measured in the (1+x)-weighted norm, a positivity guard
dt <= safety/rho_max on the fastest per-unit loss rate, and boundary
fluxes accumulated with the same stage weights as the solution so the
mass-balance identity holds to round-off for any step size.  All
reductions run in a fixed order, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssemblyError, GridMismatchError, SolverError, StiffnessError
from .grid import Density, GridSpec, weighted_norm
from .kernels import (
    CoagulationKernel,
    FragmentationSpec,
    breakage_partial_mass,
    breakage_partial_number,
    eval_K,
    eval_S,
)
from .observables import MomentSeries

TRUNCATION_MODES = ("conservative", "classical")

DT_MIN = 1e-12

# Bogacki-Shampine 2(3): third-order propagation, second-order error estimate.
_BS_C = (0.0, 0.5, 0.75)
_BS_B = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0)
_BS_E = (5.0 / 72.0, -1.0 / 12.0, -1.0 / 9.0, 1.0 / 8.0)


@dataclass(frozen=True)
class ControllerConfig:
    """Adaptive step controller settings."""

    rtol: float = 1e-6
    atol: float = 1e-12
    safety: float = 0.9
    dt_init: float | None = None
    max_factor: float = 5.0
    min_factor: float = 0.2


@dataclass(frozen=True)
class StepStats:
    """Per-step diagnostics; fluxes are totals over the accepted step."""

    t: float
    dt: float
    error: float
    overflow_mass: float
    dust_mass: float
    clips_requested: int
    number_defect: float
    rejected: int = 0
    dt_next: float = 0.0


@dataclass(frozen=True)
class OperatorTables:
    """Precomputed interaction tables for one (kernel, fragmentation, grid)."""

    grid: GridSpec
    mode: str
    has_coagulation: bool
    has_fragmentation: bool
    # coagulation channels (unordered pairs i <= j with pivot sum on grid)
    pair_i: np.ndarray = field(repr=False, default=None)
    pair_j: np.ndarray = field(repr=False, default=None)
    pair_rate: np.ndarray = field(repr=False, default=None)
    pair_t1: np.ndarray = field(repr=False, default=None)
    pair_t2: np.ndarray = field(repr=False, default=None)
    pair_w1d: np.ndarray = field(repr=False, default=None)
    pair_w2d: np.ndarray = field(repr=False, default=None)
    pair_ndefect: np.ndarray = field(repr=False, default=None)
    death: np.ndarray = field(repr=False, default=None)
    over_i: np.ndarray = field(repr=False, default=None)
    over_j: np.ndarray = field(repr=False, default=None)
    over_coef: np.ndarray = field(repr=False, default=None)
    # fragmentation tables
    frag_birth: np.ndarray = field(repr=False, default=None)
    frag_loss: np.ndarray = field(repr=False, default=None)
    dust_coef: np.ndarray = field(repr=False, default=None)
    frag_ndefect_coef: np.ndarray = field(repr=False, default=None)
    frag_number: np.ndarray = field(repr=False, default=None)

    def memory_bytes(self) -> int:
        total = 0
        for name in (
            "pair_i", "pair_j", "pair_rate", "pair_t1", "pair_t2", "pair_w1d",
            "pair_w2d", "pair_ndefect", "death", "over_i", "over_j", "over_coef",
            "frag_birth", "frag_loss", "dust_coef", "frag_ndefect_coef", "frag_number",
        ):
            arr = getattr(self, name)
            if arr is not None:
                total += arr.nbytes
        return total


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _assemble_coagulation(kernel, grid, mode):
    p, w, x_max = grid.pivots, grid.widths, grid.x_max
    n = grid.n_cells
    kmat = eval_K(kernel, p[:, None], p[None, :])
    iu, ju = np.triu_indices(n)
    s = p[iu] + p[ju]
    allowed = s <= x_max

    rate_all = kmat[iu, ju] * w[iu] * w[ju]
    rate_all[iu == ju] *= 0.5

    ai, aj = iu[allowed], ju[allowed]
    rate = rate_all[allowed]
    sa = s[allowed]
    t1 = np.searchsorted(p, sa, side="right") - 1
    top = t1 >= n - 1
    t1 = np.minimum(t1, n - 1)
    t2 = np.minimum(t1 + 1, n - 1)
    w1 = np.empty_like(sa)
    w2 = np.empty_like(sa)
    ndef = np.zeros_like(sa)
    inner = ~top
    gap = p[t2[inner]] - p[t1[inner]]
    w2[inner] = (sa[inner] - p[t1[inner]]) / gap
    w1[inner] = (p[t2[inner]] - sa[inner]) / gap
    # above the last pivot only mass can be preserved: number defect reported
    w1[top] = sa[top] / p[n - 1]
    w2[top] = 0.0
    t2[top] = t1[top]
    ndef[top] = w1[top] - 1.0

    death = kmat * w[None, :]
    over_i = over_j = over_coef = None
    if mode == "conservative":
        death = death.copy()
        death[(p[:, None] + p[None, :]) > x_max] = 0.0
    else:
        di, dj = iu[~allowed], ju[~allowed]
        over_i, over_j = di, dj
        over_coef = rate_all[~allowed] * s[~allowed]

    return {
        "pair_i": _freeze(ai),
        "pair_j": _freeze(aj),
        "pair_rate": _freeze(rate),
        "pair_t1": _freeze(t1),
        "pair_t2": _freeze(t2),
        "pair_w1d": _freeze(w1 / w[t1]),
        "pair_w2d": _freeze(w2 / w[t2]),
        "pair_ndefect": _freeze(ndef),
        "death": _freeze(np.ascontiguousarray(death)),
        "over_i": _freeze(over_i) if over_i is not None else None,
        "over_j": _freeze(over_j) if over_j is not None else None,
        "over_coef": _freeze(over_coef) if over_coef is not None else None,
    }


def _assemble_fragmentation(frag, grid, dust_policy):
    p, w, e = grid.pivots, grid.widths, grid.edges
    n = grid.n_cells
    s_piv = np.asarray(eval_S(frag, p), dtype=float)

    mass = np.zeros((n, n))
    number = np.zeros((n, n))
    dust_mass = np.zeros(n)
    if frag.family == "power-law":
        a = frag.alpha
        lo = e[:-1]
        hi_inner = e[1:]
        for j in range(n):
            hi = np.minimum(hi_inner[: j + 1], p[j])
            lo_j = lo[: j + 1]
            mass[: j + 1, j] = (hi ** (a + 2.0) - lo_j ** (a + 2.0)) / p[j] ** (a + 1.0)
            number[: j + 1, j] = (
                (a + 2.0) / (a + 1.0) * (hi ** (a + 1.0) - lo_j ** (a + 1.0)) / p[j] ** (a + 1.0)
            )
            dust_mass[j] = e[0] ** (a + 2.0) / p[j] ** (a + 1.0)
    else:
        for j in range(n):
            for i in range(j + 1):
                hi = min(e[i + 1], p[j])
                mass[i, j] = breakage_partial_mass(frag, p[j], e[i], hi)
                number[i, j] = breakage_partial_number(frag, p[j], e[i], hi)
            dust_mass[j] = breakage_partial_mass(frag, p[j], 0.0, e[0])

    if dust_policy == "lump":
        # below-grid fragment mass goes into the first cell instead of the
        # dust ledger; mass bookkeeping stays exact either way
        mass[0, :] += dust_mass
        dust_mass = np.zeros(n)

    birth_number = mass / p[:, None]
    # density-in, density-out: fold parent number (v_j w_j) and target width
    frag_birth = s_piv[None, :] * birth_number * (w[None, :] / w[:, None])
    dust_coef = s_piv * dust_mass * w
    ndefect_coef = s_piv * (birth_number - number).sum(axis=0) * w

    return {
        "frag_birth": _freeze(np.ascontiguousarray(frag_birth)),
        "frag_loss": _freeze(s_piv),
        "dust_coef": _freeze(dust_coef),
        "frag_ndefect_coef": _freeze(ndefect_coef),
        "frag_number": _freeze(s_piv[None, :] * number * w[None, :]),
    }


def estimate_table_bytes(n_cells: int, has_coag: bool, has_frag: bool) -> int:
    pairs = n_cells * (n_cells + 1) // 2
    total = 0
    if has_coag:
        total += pairs * (4 * 8 + 4 * 8) + n_cells * n_cells * 8
    if has_frag:
        total += 2 * n_cells * n_cells * 8 + 3 * n_cells * 8
    return total


def assemble(
    kernel: CoagulationKernel | None,
    frag: FragmentationSpec | None,
    grid: GridSpec,
    mode: str = "conservative",
    memory_budget: int = 2 << 30,
    dust_policy: str = "remove",
) -> OperatorTables:
    """Precompute the operator tables for the given kernels on the grid.

    ``mode='conservative'`` removes pivot pairs whose sum exceeds x_max
    from both birth and death (mass is conserved on the truncated
    domain); ``'classical'`` keeps their death contribution and records
    the escaping mass as overflow flux.  Fragments below x_min are
    removed and tracked as dust flux, or folded into the first cell
    under ``dust_policy='lump'``.
    """
    if mode not in TRUNCATION_MODES:
        raise ValueError(f"truncation mode must be one of {TRUNCATION_MODES}, got {mode!r}")
    if dust_policy not in ("remove", "lump"):
        raise ValueError(f"dust_policy must be 'remove' or 'lump', got {dust_policy!r}")
    if kernel is None and frag is None:
        raise ValueError("at least one of kernel and fragmentation must be present")
    estimate = estimate_table_bytes(grid.n_cells, kernel is not None, frag is not None)
    if estimate > memory_budget:
        raise AssemblyError(
            f"operator tables would need ~{estimate / 1e6:.0f} MB (budget "
            f"{memory_budget / 1e6:.0f} MB); use a coarser grid"
        )
    parts: dict = {}
    if kernel is not None:
        parts.update(_assemble_coagulation(kernel, grid, mode))
    if frag is not None:
        parts.update(_assemble_fragmentation(frag, grid, dust_policy))
    return OperatorTables(
        grid=grid,
        mode=mode,
        has_coagulation=kernel is not None,
        has_fragmentation=frag is not None,
        **parts,
    )


def _rhs_parts(tables: OperatorTables, v: np.ndarray):
    """Density rate plus boundary-flux and defect rates for one state."""
    n = tables.grid.n_cells
    dv = np.zeros(n)
    loss_unit = np.zeros(n)
    dust_rate = 0.0
    overflow_rate = 0.0
    ndefect_rate = 0.0
    if tables.has_coagulation:
        rates = tables.pair_rate * v[tables.pair_i] * v[tables.pair_j]
        dv += np.bincount(tables.pair_t1, weights=rates * tables.pair_w1d, minlength=n)
        dv += np.bincount(tables.pair_t2, weights=rates * tables.pair_w2d, minlength=n)
        death_unit = tables.death @ v
        dv -= v * death_unit
        loss_unit += death_unit
        ndefect_rate += float(rates @ tables.pair_ndefect)
        if tables.over_coef is not None:
            overflow_rate = float(tables.over_coef @ (v[tables.over_i] * v[tables.over_j]))
    if tables.has_fragmentation:
        dv += tables.frag_birth @ v
        dv -= tables.frag_loss * v
        loss_unit += tables.frag_loss
        dust_rate = float(tables.dust_coef @ v)
        ndefect_rate += float(tables.frag_ndefect_coef @ v)
    return dv, loss_unit, dust_rate, overflow_rate, ndefect_rate


def rhs(tables: OperatorTables, d: Density) -> np.ndarray:
    """Rate of change of the cell-averaged density (number/size/time)."""
    if not d.grid.same_as(tables.grid):
        raise GridMismatchError("density grid does not match the assembled tables")
    return _rhs_parts(tables, np.asarray(d.values, dtype=float))[0]


def _error_norm(grid: GridSpec, err: np.ndarray) -> float:
    return math.fsum(((1.0 + grid.pivots) * np.abs(err) * grid.widths).tolist())


def step(
    tables: OperatorTables,
    d: Density,
    dt_target: float,
    ctrl: ControllerConfig = ControllerConfig(),
) -> tuple[Density, StepStats]:
    """Advance one accepted Bogacki-Shampine 2(3) step of at most dt_target.

    The step shrinks on error-control or positivity rejections; the dt
    actually used and a suggestion for the next step come back in the
    stats.  Raises StiffnessError when dt would fall below 1e-12.
    """
    if dt_target <= 0.0:
        raise SolverError(f"dt_target must be > 0, got {dt_target}")
    if not d.grid.same_as(tables.grid):
        raise GridMismatchError("density grid does not match the assembled tables")
    grid = d.grid
    v = np.asarray(d.values, dtype=float)
    tol = ctrl.atol + ctrl.rtol * weighted_norm(d)
    vmax = float(v.max(initial=0.0))
    band = 1e-12 * vmax

    k1, loss_unit, dust1, over1, nd1 = _rhs_parts(tables, v)
    # cells without content cannot go negative, so they do not constrain dt
    rho_max = float(loss_unit[v > 0.0].max(initial=0.0))
    dt = dt_target
    if rho_max > 0.0:
        dt = min(dt, ctrl.safety / rho_max)
    rejected = 0
    while True:
        if dt < DT_MIN:
            raise StiffnessError(
                f"step size underflow (dt = {dt:.3e} at t = {d.t:g}); the loss rates are too "
                "stiff for the explicit stepper: shrink the domain or use an implicit extension"
            )
        k2, _, dust2, over2, nd2 = _rhs_parts(tables, v + (0.5 * dt) * k1)
        k3, _, dust3, over3, nd3 = _rhs_parts(tables, v + (0.75 * dt) * k2)
        v_new = v + dt * (_BS_B[0] * k1 + _BS_B[1] * k2 + _BS_B[2] * k3)
        new_min = float(v_new.min(initial=0.0))
        new_max = float(v_new.max(initial=0.0))
        if new_max > 0.0 and new_min < -1e-12 * new_max:
            dt *= 0.5
            rejected += 1
            continue
        k4, _, _, _, _ = _rhs_parts(tables, v_new)
        err = dt * (_BS_E[0] * k1 + _BS_E[1] * k2 + _BS_E[2] * k3 + _BS_E[3] * k4)
        err_norm = _error_norm(grid, err)
        if err_norm <= tol:
            break
        dt *= max(ctrl.min_factor, 0.9 * (tol / err_norm) ** (1.0 / 3.0))
        rejected += 1

    if err_norm > 0.0:
        factor = min(ctrl.max_factor, max(ctrl.min_factor, 0.9 * (tol / err_norm) ** (1.0 / 3.0)))
    else:
        factor = ctrl.max_factor
    dt_next = dt * factor
    if rho_max > 0.0:
        dt_next = min(dt_next, ctrl.safety / rho_max)

    dust = dt * (_BS_B[0] * dust1 + _BS_B[1] * dust2 + _BS_B[2] * dust3)
    over = dt * (_BS_B[0] * over1 + _BS_B[1] * over2 + _BS_B[2] * over3)
    ndef = dt * (_BS_B[0] * nd1 + _BS_B[1] * nd2 + _BS_B[2] * nd3)
    clips = int(np.count_nonzero(v_new < 0.0))
    d_new = Density(grid, v_new, d.t + dt)
    stats = StepStats(
        t=d_new.t,
        dt=dt,
        error=err_norm,
        overflow_mass=max(0.0, over),
        dust_mass=max(0.0, dust),
        clips_requested=clips,
        number_defect=ndef,
        rejected=rejected,
        dt_next=dt_next,
    )
    return d_new, stats


@dataclass
class RunReport:
    """Full simulation output: snapshots, moment series, diagnostics."""

    grid: GridSpec
    mode: str
    times: np.ndarray
    snapshots: list
    series: MomentSeries
    xnorm: np.ndarray
    overflow_cum: np.ndarray
    dust_cum: np.ndarray
    mass_balance: dict
    steps: dict
    audit: object = None
    config: dict | None = None


def evolve(
    tables: OperatorTables,
    d0: Density,
    t_end: float,
    output_times=None,
    ctrl: ControllerConfig = ControllerConfig(),
    orders=(0.0, 1.0, 2.0),
) -> RunReport:
    """Advance from d0 to t_end, sampling snapshots on the output schedule.

    The mass-balance identity M1(t) + overflow + dust = M1(0) is
    evaluated at every snapshot and summarized in the report.
    """
    if t_end < d0.t:
        raise SolverError(f"t_end = {t_end} precedes the initial time {d0.t}")
    if output_times is None:
        output_times = np.linspace(d0.t, t_end, 11) if t_end > d0.t else np.array([d0.t])
    times = np.asarray(output_times, dtype=float)
    if times.size == 0 or times[0] != d0.t or np.any(np.diff(times) <= 0.0) or times[-1] > t_end:
        raise SolverError("output schedule must start at t0, increase strictly, and end by t_end")

    orders = np.atleast_1d(np.asarray(orders, dtype=float))
    for must in (1.0, 0.0):
        if not np.any(orders == must):
            orders = np.concatenate(([must], orders))

    snapshots = [d0]
    dust_cum = [0.0]
    over_cum = [0.0]
    ndefect_cum = 0.0
    n_accepted = 0
    n_rejected = 0
    clips_total = 0
    dt_used_min = math.inf
    dt_used_max = 0.0
    err_max = 0.0

    d = d0
    dt_suggest = ctrl.dt_init
    dust_acc = 0.0
    over_acc = 0.0
    for t_next in times[1:]:
        while d.t < t_next:
            gap = t_next - d.t
            dt_try = gap if dt_suggest is None else min(dt_suggest, gap)
            d, st = step(tables, d, dt_try, ctrl)
            dust_acc += st.dust_mass
            over_acc += st.overflow_mass
            ndefect_cum += st.number_defect
            n_accepted += 1
            n_rejected += st.rejected
            clips_total += st.clips_requested
            dt_used_min = min(dt_used_min, st.dt)
            dt_used_max = max(dt_used_max, st.dt)
            err_max = max(err_max, st.error)
            dt_suggest = st.dt_next
        d = Density(d.grid, d.values, float(t_next))
        snapshots.append(d)
        dust_cum.append(dust_acc)
        over_cum.append(over_acc)

    series = MomentSeries.from_snapshots(snapshots, orders)
    xnorm = np.array([weighted_norm(s) for s in snapshots])
    m1 = series.column(1.0)
    m1_0 = float(m1[0])
    residual = m1 + np.asarray(over_cum) + np.asarray(dust_cum) - m1_0
    rel = residual / m1_0 if m1_0 != 0.0 else residual
    mass_balance = {
        "initial_mass": m1_0,
        "residual": residual.tolist(),
        "relative_residual": rel.tolist(),
        "max_abs_relative_residual": float(np.abs(rel).max()) if rel.size else 0.0,
    }
    steps = {
        "accepted": n_accepted,
        "rejected": n_rejected,
        "dt_min": dt_used_min if n_accepted else 0.0,
        "dt_max": dt_used_max,
        "max_local_error": err_max,
        "positivity_clips_requested": clips_total,
        "number_defect_cum": ndefect_cum,
    }
    return RunReport(
        grid=d0.grid,
        mode=tables.mode,
        times=np.array([s.t for s in snapshots]),
        snapshots=snapshots,
        series=series,
        xnorm=xnorm,
        overflow_cum=np.asarray(over_cum),
        dust_cum=np.asarray(dust_cum),
        mass_balance=mass_balance,
        steps=steps,
    )
