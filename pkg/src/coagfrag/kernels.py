"""Coagulation kernels, fragmentation rates, and breakage functions.

All rate objects are immutable after construction and evaluate vectorized
over numpy arrays.  Sizes are dimensionless model volumes; no unit system
is attached.  Construction validates parameters eagerly so that bad
configurations fail with an actionable message instead of producing NaNs
deep inside the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, UnsupportedFamilyError

COAGULATION_FAMILIES = (
    "constant",
    "shear",
    "smoluchowski-modified",
    "sum-power",
    "product-power",
    "custom-table",
)

FRAGMENTATION_FAMILIES = ("power-law", "custom")

# Preset name used in configuration files for the power-law fragmentation pair.
POWERLAW_FRAG_PRESET = "powerlaw-frag"


def _as_positive_array(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} must be > 0, got {arr[arr <= 0.0][:3]}")
    return arr


@dataclass(frozen=True)
class KernelTable:
    """Symmetric bilinear interpolant on a log-log grid of size nodes.

    Out-of-range queries clamp to the table boundary.  Values are
    symmetrized at construction so evaluation is symmetric by storage.
    """

    x_nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.x_nodes, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("custom-table needs >= 2 size nodes")
        if np.any(nodes <= 0.0) or np.any(np.diff(nodes) <= 0.0):
            raise ValueError("custom-table nodes must be positive and strictly increasing")
        if vals.shape != (nodes.size, nodes.size):
            raise ValueError(
                f"custom-table values must be square {nodes.size}x{nodes.size}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
            raise ValueError("custom-table values must be finite and non-negative")
        vals = 0.5 * (vals + vals.T)
        log_nodes = np.log(nodes)
        for arr in (nodes, vals, log_nodes):
            arr.setflags(write=False)
        object.__setattr__(self, "x_nodes", nodes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_log_nodes", log_nodes)

    def __call__(self, x, y):
        lx = np.log(np.asarray(x, dtype=float))
        ly = np.log(np.asarray(y, dtype=float))
        ln = self._log_nodes
        lx = np.clip(lx, ln[0], ln[-1])
        ly = np.clip(ly, ln[0], ln[-1])
        ix = np.clip(np.searchsorted(ln, lx, side="right") - 1, 0, ln.size - 2)
        iy = np.clip(np.searchsorted(ln, ly, side="right") - 1, 0, ln.size - 2)
        tx = (lx - ln[ix]) / (ln[ix + 1] - ln[ix])
        ty = (ly - ln[iy]) / (ln[iy + 1] - ln[iy])
        v = self.values
        return (
            v[ix, iy] * (1.0 - tx) * (1.0 - ty)
            + v[ix + 1, iy] * tx * (1.0 - ty)
            + v[ix, iy + 1] * (1.0 - tx) * ty
            + v[ix + 1, iy + 1] * tx * ty
        )


@dataclass(frozen=True)
class CoagulationKernel:
    """A symmetric, non-negative coagulation rate K(x, y).

    Parameters
    ----------
    family : str
        One of ``constant``, ``shear``, ``smoluchowski-modified``,
        ``sum-power``, ``product-power``, ``custom-table``.
    k0 : float
        Rate prefactor (dimensionless model units), >= 0.
    c : float, optional
        Regularizer of the modified Smoluchowski kernel, > 0.
    mu1, mu2 : float, optional
        Exponent pair for the power families.  ``sum-power`` evaluates
        k0*(x^mu1 y^mu2 + x^mu2 y^mu1); ``product-power`` evaluates
        k0*(x*y)^mu1 (mu2, if given, must equal mu1).
    table : KernelTable, optional
        Interpolation table for the ``custom-table`` family.
    """

    family: str
    k0: float = 1.0
    c: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    table: KernelTable | None = None

    def __post_init__(self):
        if self.family not in COAGULATION_FAMILIES:
            raise ValueError(
                f"unknown coagulation family {self.family!r}; expected one of {COAGULATION_FAMILIES}"
            )
        if not math.isfinite(self.k0) or self.k0 < 0.0:
            raise ValueError(f"k0 must be finite and >= 0, got {self.k0}")
        if self.family == "smoluchowski-modified":
            if self.c is None or not math.isfinite(self.c) or self.c <= 0.0:
                raise ValueError("smoluchowski-modified requires regularizer c > 0")
        if self.family in ("sum-power", "product-power"):
            if self.mu1 is None:
                raise ValueError(f"{self.family} requires exponent mu1")
            mu2 = self.mu2 if self.mu2 is not None else self.mu1
            if self.family == "product-power" and mu2 != self.mu1:
                raise ValueError("product-power uses a single exponent: mu2 must equal mu1")
            if self.mu1 < 0.0 or mu2 < 0.0:
                raise ValueError("power-family exponents must be >= 0")
            object.__setattr__(self, "mu2", mu2)
        if self.family == "custom-table" and self.table is None:
            raise ValueError("custom-table requires a KernelTable")

    def __call__(self, x, y):
        """Raw vectorized evaluation; use :func:`eval_K` for the checked form."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        f = self.family
        if f == "constant":
            return np.broadcast_to(self.k0, np.broadcast_shapes(x.shape, y.shape)).copy()
        if f == "shear":
            return self.k0 * (np.cbrt(x) + np.cbrt(y)) ** (7.0 / 3.0)
        if f == "smoluchowski-modified":
            cx, cy = np.cbrt(x), np.cbrt(y)
            return self.k0 * (cx + cy) ** 2 / (cx * cy + self.c)
        if f == "sum-power":
            return self.k0 * (x**self.mu1 * y**self.mu2 + x**self.mu2 * y**self.mu1)
        if f == "product-power":
            return self.k0 * (x * y) ** self.mu1
        return self.table(x, y)


def eval_K(kernel: CoagulationKernel, x, y):
    """Evaluate K(x, y) with domain and finiteness checks.

    Raises
    ------
    ValueError
        If any size is <= 0.
    EvaluationError
        If the result is non-finite; the message names the offending pair.
    """
    x = _as_positive_array(x, "x")
    y = _as_positive_array(y, "y")
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.asarray(kernel(x, y), dtype=float)
    if not np.all(np.isfinite(out)):
        bad = np.nonzero(~np.isfinite(np.atleast_1d(out)))[0][:1]
        xb = np.broadcast_to(x, out.shape).ravel() if out.ndim else x
        yb = np.broadcast_to(y, out.shape).ravel() if out.ndim else y
        pair = (float(np.atleast_1d(xb)[bad][0]), float(np.atleast_1d(yb)[bad][0])) if out.ndim else (float(x), float(y))
        raise EvaluationError(
            f"{kernel.family} kernel is non-finite at (x, y) = ({pair[0]:g}, {pair[1]:g})"
        )
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FragmentationSpec:
    """Fragmentation rate S(y) and breakage density b(y, x).

    The power-law family is S(y) = s0*y^gamma with
    b(y, x) = (alpha+2) x^alpha / y^(alpha+1) on 0 < x < y, which yields
    N = (alpha+2)/(alpha+1) fragments per breakup independent of y.
    alpha <= -1 is rejected at construction because the fragment count
    diverges.  A custom family supplies callables ``rate_fn(y)`` and
    ``breakage_fn(y, x)``; its integrals fall back to adaptive quadrature.
    """

    family: str = "power-law"
    s0: float = 1.0
    gamma: float = 1.0
    alpha: float = 0.0
    rate_fn: object = field(default=None, repr=False)
    breakage_fn: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FRAGMENTATION_FAMILIES:
            raise ValueError(
                f"unknown fragmentation family {self.family!r}; expected one of {FRAGMENTATION_FAMILIES}"
            )
        if self.family == "power-law":
            if not math.isfinite(self.s0) or self.s0 <= 0.0:
                raise ValueError(f"s0 must be finite and > 0, got {self.s0}")
            if not math.isfinite(self.gamma):
                raise ValueError("gamma must be finite")
            if not math.isfinite(self.alpha) or self.alpha <= -1.0:
                raise ValueError(
                    f"alpha must be > -1 (fragment count diverges otherwise), got {self.alpha}"
                )
        else:
            if self.rate_fn is None or self.breakage_fn is None:
                raise ValueError("custom fragmentation requires rate_fn and breakage_fn")


def eval_S(frag: FragmentationSpec, y):
    """Fragmentation rate S(y) = s0*y^gamma (power-law) for y > 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        if frag.family == "power-law" and frag.gamma < 0.0:
            raise ValueError("S(y) is singular at y = 0 for gamma < 0")
        if np.any(y < 0.0):
            raise ValueError("parent size must be > 0")
    if frag.family == "power-law":
        out = frag.s0 * y**frag.gamma
    else:
        out = np.asarray(frag.rate_fn(y), dtype=float)
    if np.any(~np.isfinite(np.atleast_1d(out))):
        raise EvaluationError(f"fragmentation rate is non-finite at y = {y!r}")
    if out.ndim == 0:
        return float(out)
    return out


def eval_b(frag: FragmentationSpec, y, x):
    """Breakage density b(y, x) for parent y and fragment x; 0 for x >= y."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(y <= 0.0):
        raise ValueError("parent size must be > 0")
    inside = (x > 0.0) & (x < y)
    if frag.family == "power-law":
        a = frag.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = (a + 2.0) * np.where(inside, x, 1.0) ** a / y ** (a + 1.0)
        out = np.where(inside, raw, 0.0)
    else:
        out = np.where(inside, np.asarray(frag.breakage_fn(y, x), dtype=float), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def fragment_count(frag: FragmentationSpec, y: float = 1.0) -> float:
    """Number of fragments per breakup, N = integral of b(y, .) over (0, y).

    Closed form (alpha+2)/(alpha+1) for the power-law family, independent
    of the parent size; adaptive quadrature at the given parent otherwise.
    """
    if frag.family == "power-law":
        return (frag.alpha + 2.0) / (frag.alpha + 1.0)
    from scipy.integrate import quad

    val, _ = quad(lambda x: eval_b(frag, y, x), 0.0, y, epsabs=0.0, epsrel=1e-11, limit=200)
    return float(val)


def breakage_partial_mass(frag: FragmentationSpec, y: float, a: float, b_hi: float) -> float:
    """Exact partial mass integral of fragments, int_a^b_hi x*b(y, x) dx.

    Closed form (b_hi^(alpha+2) - a^(alpha+2)) / y^(alpha+1) for the
    power-law family; the full interval (0, y) returns y, which is the
    mass-conservation normalization of b.
    """
    if not (0.0 <= a <= b_hi <= y):
        raise ValueError(
            f"integration interval [{a:g}, {b_hi:g}] must satisfy 0 <= a <= b_hi <= y = {y:g}"
        )
    if frag.family == "power-law":
        p = frag.alpha + 2.0
        return (b_hi**p - a**p) / y ** (frag.alpha + 1.0)
    from scipy.integrate import quad

    if a == b_hi:
        return 0.0
    val, _ = quad(
        lambda x: x * eval_b(frag, y, x), a, b_hi, epsabs=0.0, epsrel=1e-11, limit=200
    )
    return float(val)


def breakage_partial_number(frag: FragmentationSpec, y: float, a: float, b_hi: float) -> float:
    """Exact partial number integral of fragments, int_a^b_hi b(y, x) dx."""
    if not (0.0 <= a <= b_hi <= y):
        raise ValueError(
            f"integration interval [{a:g}, {b_hi:g}] must satisfy 0 <= a <= b_hi <= y = {y:g}"
        )
    if frag.family == "power-law":
        p = frag.alpha + 1.0
        return (frag.alpha + 2.0) / p * (b_hi**p - a**p) / y**p
    from scipy.integrate import quad

    if a == b_hi:
        return 0.0
    val, _ = quad(lambda x: eval_b(frag, y, x), a, b_hi, epsabs=0.0, epsrel=1e-11, limit=200)
    return float(val)


@dataclass(frozen=True)
class HypothesisConstants:
    """Envelope constants for the growth hypotheses on K, S and Gamma.

    Fields may be None on the side whose process is absent from a
    scenario (pure coagulation has no m/lam/nu/L_gamma; pure
    fragmentation has no k1/mu).  Present fields are validated:
    k1 > 0, mu in [0, 1); m > 0, lam in (0, 1); L_gamma > 0, nu > -1.
    """

    k1: float | None = None
    mu: float | None = None
    m: float | None = None
    lam: float | None = None
    L_gamma: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.k1 is not None and not (math.isfinite(self.k1) and self.k1 > 0.0):
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if self.mu is not None and not (0.0 <= self.mu < 1.0):
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
        if self.m is not None and not (math.isfinite(self.m) and self.m > 0.0):
            raise ValueError(f"m must be > 0, got {self.m}")
        if self.lam is not None and not (0.0 < self.lam < 1.0):
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.L_gamma is not None and not (math.isfinite(self.L_gamma) and self.L_gamma > 0.0):
            raise ValueError(f"L_gamma must be > 0, got {self.L_gamma}")
        if self.nu is not None and not (math.isfinite(self.nu) and 1.0 + self.nu > 0.0):
            raise ValueError(f"nu must satisfy 1 + nu > 0, got {self.nu}")

    def merged_with(self, other: "HypothesisConstants") -> "HypothesisConstants":
        """Fill missing fields from ``other``; declared values win."""
        return HypothesisConstants(
            k1=self.k1 if self.k1 is not None else other.k1,
            mu=self.mu if self.mu is not None else other.mu,
            m=self.m if self.m is not None else other.m,
            lam=self.lam if self.lam is not None else other.lam,
            L_gamma=self.L_gamma if self.L_gamma is not None else other.L_gamma,
            nu=self.nu if self.nu is not None else other.nu,
        )


def make_kernel(family: str, **params) -> CoagulationKernel:
    """Build a preset coagulation kernel by its configuration name."""
    if family == "custom-table":
        table = KernelTable(
            np.asarray(params.pop("x_nodes"), dtype=float),
            np.asarray(params.pop("values"), dtype=float),
        )
        return CoagulationKernel(family=family, table=table, **params)
    return CoagulationKernel(family=family, **params)


def make_fragmentation(family: str, **params) -> FragmentationSpec:
    """Build a fragmentation spec; accepts the preset name ``powerlaw-frag``."""
    if family == POWERLAW_FRAG_PRESET:
        family = "power-law"
    return FragmentationSpec(family=family, **params)


def suggest_kernel_constants(kernel: CoagulationKernel) -> tuple[float, float]:
    """Closed-form (k1, mu) envelope for a preset kernel.

    Raises UnsupportedFamilyError for custom tables and for power
    families whose exponents leave no admissible mu < 1.
    """
    f = kernel.family
    if f == "constant":
        return math.sqrt(kernel.k0), 0.0
    if f == "shear":
        # (x^{1/3}+y^{1/3})^{7/3} <= 2^{7/3} max(x,y)^{7/9} <= 2^{7/3} ((1+x)(1+y))^{7/9}
        return math.sqrt(kernel.k0) * 2.0 ** (7.0 / 6.0), 7.0 / 9.0
    if f == "smoluchowski-modified":
        # (x^{1/3}+y^{1/3})^2 <= 4 ((1+x)(1+y))^{1/3} * ... <= 4 ((1+x)(1+y))^{2/3}; denom >= c.
        return 2.0 * math.sqrt(kernel.k0 / kernel.c), 2.0 / 3.0
    if f == "sum-power":
        mu = max(kernel.mu1, kernel.mu2)
        if mu >= 1.0:
            raise UnsupportedFamilyError(
                f"sum-power with max exponent {mu} admits no sub-linear envelope (mu < 1 required)"
            )
        return math.sqrt(2.0 * kernel.k0), mu
    if f == "product-power":
        if kernel.mu1 >= 1.0:
            raise UnsupportedFamilyError(
                f"product-power with exponent {kernel.mu1} admits no sub-linear envelope"
            )
        return math.sqrt(kernel.k0), kernel.mu1
    raise UnsupportedFamilyError(
        "custom-table kernels have no closed-form envelope; declare k1 and mu explicitly"
    )


def suggest_fragmentation_constants(frag: FragmentationSpec) -> tuple[float, float, float, float]:
    """Closed-form (m, lam, nu, L_gamma) for the power-law family.

    Valid for 0 < gamma < 1 and -1 < alpha <= 0 (the range for which the
    lower bound Gamma >= L(1+x)^nu with nu = gamma-1 holds).
    """
    if frag.family != "power-law":
        raise UnsupportedFamilyError(
            "custom fragmentation has no closed-form constants; declare them explicitly"
        )
    g, a = frag.gamma, frag.alpha
    if not (0.0 < g < 1.0):
        raise UnsupportedFamilyError(
            f"no admissible (lambda, nu) for gamma = {g}; need 0 < gamma < 1"
        )
    if a > 0.0:
        raise UnsupportedFamilyError(
            f"alpha = {a} > 0 breaks the lower bound on Gamma near y = x; need alpha <= 0"
        )
    return frag.s0, 1.0 - g, g - 1.0, frag.s0 * (a + 2.0)


def suggest_constants(
    kernel: CoagulationKernel | None, frag: FragmentationSpec | None
) -> HypothesisConstants:
    """Combined closed-form constants for preset kernel/fragmentation pairs.

    Sides whose component is absent come back as None fields.
    """
    k1 = mu = m = lam = nu = L_gamma = None
    if kernel is not None:
        k1, mu = suggest_kernel_constants(kernel)
    if frag is not None:
        m, lam, nu, L_gamma = suggest_fragmentation_constants(frag)
    return HypothesisConstants(k1=k1, mu=mu, m=m, lam=lam, L_gamma=L_gamma, nu=nu)
