"""Closed-form reference solutions used as independent ground truth.

These classical solutions never touch the solver's operator tables; they
are evaluated from their formulas and, where useful, from the moment
ODEs they satisfy.  ``continuum_rhs`` evaluates the right-hand side of
the continuous equation by adaptive quadrature so an oracle density can
be certified against the equation itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .kernels import CoagulationKernel, FragmentationSpec, eval_S, eval_b, fragment_count, make_fragmentation, make_kernel


def oracle_constant_coagulation(t, x):
    """Density for K=1, S=0, f0 = e^-x: f(x,t) = 4/(t+2)^2 * exp(-2x/(t+2))."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    return 4.0 / (t + 2.0) ** 2 * np.exp(-2.0 * x / (t + 2.0))


def oracle_constant_coagulation_m0(t):
    """M0 for the constant-kernel case: 2/(t+2); M1 stays 1."""
    return 2.0 / (np.asarray(t, dtype=float) + 2.0)


def oracle_linear_binary_fragmentation(t, x):
    """Density for K=0, S=x, b=2/y, f0 = e^-x: f(x,t) = (1+t)^2 exp(-x(1+t))."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    return (1.0 + t) ** 2 * np.exp(-x * (1.0 + t))


def oracle_linear_binary_fragmentation_m0(t):
    """M0 for the linear binary case: 1+t; M1 stays 1."""
    return 1.0 + np.asarray(t, dtype=float)


def oracle_multiple_frag_number_growth(frag: FragmentationSpec, t, m0_0: float = 1.0, m1_0: float = 1.0):
    """M0(t) for K=0 and a linear rate S(x) = s0*x with mass-conserving b.

    The zeroth-moment balance closes through the conserved first moment:
    M0(t) = M0(0) + (N-1)*s0*M1(0)*t.  Only gamma = 1 closes this way.
    """
    if frag.family != "power-law" or frag.gamma != 1.0:
        raise ValueError("the number-growth oracle requires a power-law rate with gamma = 1")
    n_frag = fragment_count(frag)
    return m0_0 + (n_frag - 1.0) * frag.s0 * m1_0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class OracleCase:
    """A named closed-form benchmark: kernel configuration plus solution."""

    name: str
    description: str
    kernel: CoagulationKernel | None
    frag: FragmentationSpec | None
    initial: object
    density: object | None
    moment_fns: dict = field(default_factory=dict)
    validity: str = ""
    audit_fail_expected: bool = False


def _exp_profile(x):
    return np.exp(-np.asarray(x, dtype=float))


ORACLE_CASES = {
    "scott-constant": OracleCase(
        name="scott-constant",
        description="constant kernel K=1, no fragmentation, exponential start",
        kernel=make_kernel("constant", k0=1.0),
        frag=None,
        initial=_exp_profile,
        density=oracle_constant_coagulation,
        moment_fns={0.0: oracle_constant_coagulation_m0, 1.0: lambda t: np.ones_like(np.asarray(t, float))},
        validity="all t >= 0",
    ),
    "ziff-linear-binary": OracleCase(
        name="ziff-linear-binary",
        description="no coagulation, linear rate S=x with uniform binary breakage",
        kernel=None,
        frag=make_fragmentation("power-law", s0=1.0, gamma=1.0, alpha=0.0),
        initial=_exp_profile,
        density=oracle_linear_binary_fragmentation,
        moment_fns={0.0: oracle_linear_binary_fragmentation_m0, 1.0: lambda t: np.ones_like(np.asarray(t, float))},
        validity="all t >= 0",
        audit_fail_expected=True,
    ),
    "powerlaw-number-growth": OracleCase(
        name="powerlaw-number-growth",
        description="no coagulation, S=x with alpha=-0.5 multiple fragmentation",
        kernel=None,
        frag=make_fragmentation("power-law", s0=1.0, gamma=1.0, alpha=-0.5),
        initial=_exp_profile,
        density=None,
        moment_fns={
            0.0: lambda t: oracle_multiple_frag_number_growth(
                make_fragmentation("power-law", s0=1.0, gamma=1.0, alpha=-0.5), t
            ),
            1.0: lambda t: np.ones_like(np.asarray(t, float)),
        },
        validity="all t >= 0 (moments only)",
        audit_fail_expected=True,
    ),
}


def continuum_rhs(
    kernel: CoagulationKernel | None,
    frag: FragmentationSpec | None,
    f,
    x: float,
    upper: float = np.inf,
    epsrel: float = 1e-9,
) -> float:
    """Right-hand side of the continuous equation at size x by quadrature.

    ``f`` is a callable density of one variable (a fixed time slice);
    ``upper`` truncates the unbounded integrals when f has a known cutoff.
    Independent of the solver's operator tables by construction.
    """
    total = 0.0
    if kernel is not None:
        birth, _ = quad(
            lambda y: float(kernel(x - y, y)) * f(x - y) * f(y),
            0.0, x, epsabs=1e-14, epsrel=epsrel, limit=200,
        )
        death, _ = quad(
            lambda y: float(kernel(x, y)) * f(y),
            0.0, upper, epsabs=1e-14, epsrel=epsrel, limit=200,
        )
        total += 0.5 * birth - f(x) * death
    if frag is not None:
        gain, _ = quad(
            lambda y: eval_b(frag, y, x) * eval_S(frag, y) * f(y),
            x, upper, epsabs=1e-14, epsrel=epsrel, limit=200,
        )
        total += gain - eval_S(frag, x) * f(x)
    return float(total)
