"""Moments, running moment integrals, and the moment-integrability ladder.

Moments use the pivot rule M_r = sum_i p_i^r v_i w_i with compensated
summation in ascending cell order; running integrals I_r accumulate by
the trapezoid rule on the snapshot schedule (so they are reproducible
from the emitted CSV alone, independent of internal step sizes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grid import Density


def moments(d: Density, orders) -> np.ndarray:
    """Pivot-rule moments of the density for the given non-negative orders."""
    orders = np.atleast_1d(np.asarray(orders, dtype=float))
    if np.any(orders < 0.0):
        raise ValueError(f"moment orders must be >= 0, got {orders[orders < 0.0]}")
    g = d.grid
    base = d.values * g.widths
    out = np.empty(orders.size)
    for k, r in enumerate(orders):
        out[k] = math.fsum((g.pivots**r * base).tolist())
    return out


def moment(d: Density, order: float) -> float:
    return float(moments(d, [order])[0])


def trapezoid_running(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid of values(t) starting at 0."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    for k in range(1, times.size):
        out[k] = out[k - 1] + 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1])
    return out


@dataclass
class MomentSeries:
    """Time series of M_r for a set of orders, with running integrals I_r.

    Orders always include 0 and 1; the ``values`` array is (n_times, n_orders).
    """

    orders: np.ndarray
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        self.orders = np.atleast_1d(np.asarray(self.orders, dtype=float))
        if 0.0 not in self.orders or 1.0 not in self.orders:
            raise ValueError("moment series must include orders 0 and 1")
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float).reshape(self.times.size, self.orders.size)

    @classmethod
    def from_snapshots(cls, snapshots, orders) -> "MomentSeries":
        orders = np.atleast_1d(np.asarray(orders, dtype=float))
        times = np.array([d.t for d in snapshots])
        values = np.vstack([moments(d, orders) for d in snapshots]) if snapshots else np.zeros((0, orders.size))
        return cls(orders=orders, times=times, values=values)

    def column(self, order: float) -> np.ndarray:
        idx = np.nonzero(np.isclose(self.orders, order, rtol=0.0, atol=1e-12))[0]
        if idx.size == 0:
            raise ValueError(f"order {order} is not sampled in this series")
        return self.values[:, idx[0]]

    def running_integral(self, order: float) -> np.ndarray:
        return trapezoid_running(self.times, self.column(order))


@dataclass(frozen=True)
class LadderResult:
    """Outcome of the moment-integrability bootstrap.

    ``sequence`` holds the strictly increasing orders visited; while the
    current order rho satisfies rho - mu < 1 the next order is
    rho + nu - mu + 1, and once rho - mu >= 1 the terminal integrable
    order is 2 + nu - delta.  ``terminated`` is False when the
    admissibility condition 1 + nu > mu fails.
    """

    mu: float
    nu: float
    rho0: float
    delta: float
    sequence: tuple
    terminal_order: float | None
    terminated: bool
    reason: str

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "nu": self.nu,
            "rho0": self.rho0,
            "delta": self.delta,
            "sequence": list(self.sequence),
            "terminal_order": self.terminal_order,
            "terminated": self.terminated,
            "reason": self.reason,
        }


def moment_ladder(mu: float, nu: float, rho0: float, delta: float) -> LadderResult:
    """Iterate the integrable-moment bootstrap from order rho0.

    Arithmetic runs on exact rationals (floats are binary rationals), so
    consecutive increments equal 1 + nu - mu exactly.
    """
    if not (0.0 <= mu < 1.0):
        raise ValueError(f"mu must lie in [0, 1), got {mu}")
    if not (nu > -1.0):
        raise ValueError(f"nu must exceed -1, got {nu}")
    if not (rho0 >= 1.0 and rho0 > mu):
        raise ValueError(f"rho0 must satisfy rho0 >= 1 and rho0 > mu, got {rho0}")
    if not (delta > 0.0):
        raise ValueError(f"delta must be > 0, got {delta}")

    mu_f, nu_f, rho_f, delta_f = (Fraction(v) for v in (mu, nu, rho0, delta))
    if 1 + nu_f <= mu_f:
        return LadderResult(
            mu=mu, nu=nu, rho0=rho0, delta=delta,
            sequence=(rho0,), terminal_order=None, terminated=False,
            reason="condition 1+nu>mu violated",
        )
    increment = 1 + nu_f - mu_f
    seq = [rho_f]
    while seq[-1] - mu_f < 1:
        seq.append(seq[-1] + increment)
    terminal = 2 + nu_f - delta_f
    return LadderResult(
        mu=mu, nu=nu, rho0=rho0, delta=delta,
        sequence=tuple(float(r) for r in seq),
        terminal_order=float(terminal),
        terminated=True,
        reason="reached rho-mu >= 1",
    )


@dataclass(frozen=True)
class TrendReport:
    """Boundedness diagnostics for a running moment integral.

    This is a growth report, never a finiteness verdict: whether I_r
    stays finite on an unbounded domain is not decidable from finitely
    many samples.
    """

    order: float
    t_final: float
    integral_final: float
    half_time_ratio: float
    growth_exponent: float
    fast_growth: bool

    def as_dict(self) -> dict:
        return {
            "order": self.order,
            "t_final": self.t_final,
            "integral_final": self.integral_final,
            "half_time_ratio": self.half_time_ratio,
            "growth_exponent": self.growth_exponent,
            "fast_growth": self.fast_growth,
        }


def integrability_probe(series: MomentSeries, order: float, growth_power: float = 3.0) -> TrendReport:
    """Report I_order at the final time plus growth heuristics.

    ``half_time_ratio`` is I(t)/I(t/2) with linear interpolation between
    snapshots; ``growth_exponent`` estimates d log M / d log t from the
    last two snapshots and sets ``fast_growth`` when it exceeds
    ``growth_power``.
    """
    integral = series.running_integral(order)
    times = series.times
    t_final = float(times[-1]) if times.size else 0.0
    i_final = float(integral[-1]) if times.size else 0.0
    half_ratio = math.inf
    if times.size >= 2 and t_final > 0.0:
        i_half = float(np.interp(0.5 * t_final, times, integral))
        half_ratio = i_final / i_half if i_half > 0.0 else (1.0 if i_final == 0.0 else math.inf)
    elif times.size:
        half_ratio = 1.0
    m = series.column(order)
    exponent = 0.0
    if times.size >= 2 and m[-1] > 0.0 and m[-2] > 0.0 and times[-2] > 0.0 and times[-1] > times[-2]:
        exponent = float(
            (math.log(m[-1]) - math.log(m[-2])) / (math.log(times[-1]) - math.log(times[-2]))
        )
    return TrendReport(
        order=float(order),
        t_final=t_final,
        integral_final=i_final,
        half_time_ratio=float(half_ratio),
        growth_exponent=exponent,
        fast_growth=exponent > growth_power,
    )
