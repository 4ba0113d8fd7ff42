"""Hypothesis checks for a configured kernel pair.

Every growth/support hypothesis and the admissibility condition
1 + nu > mu are checked against declared (or suggested) envelope
constants.  Preset families are decided in closed form where a
sufficient condition is available; otherwise the check falls back to
dense sampling on a log grid, and a verdict earned that way is reported
as "sampled-pass" — verified on samples, never proven.  Fail verdicts
always carry witnesses that reproduce the violation by re-evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import (
    CoagulationKernel,
    FragmentationSpec,
    HypothesisConstants,
    eval_K,
    eval_S,
    eval_b,
    fragment_count,
)

HYPOTHESES = ("A1", "A2", "A3", "A4", "A5")

PASS = "pass"
FAIL = "fail"
SAMPLED_PASS = "sampled-pass"
SKIPPED = "skipped"

_MAX_WITNESSES = 16


@dataclass(frozen=True)
class SamplePlan:
    """Log-spaced sampling plan for the audit.

    ``n_points`` log-spaced points per axis on [x_min, x_max] (>= 1000
    required), ``n_pairs`` seeded log-uniform random pairs for the
    symmetry check, ``n_inner`` quantiles of (0, x) for the lower-bound
    check on the fragmentation kernel.
    """

    x_min: float = 1e-6
    x_max: float = 1e6
    n_points: int = 4096
    n_pairs: int = 10_000
    n_inner: int = 64
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.x_min < self.x_max):
            raise ConfigError("sample plan needs 0 < x_min < x_max")
        if self.n_points < 1000:
            raise ConfigError(
                f"sample plan must cover the range with >= 1000 log-spaced points, got {self.n_points}"
            )
        if self.n_inner < 2 or self.n_pairs < 1:
            raise ConfigError("sample plan needs n_inner >= 2 and n_pairs >= 1")

    def axis(self) -> np.ndarray:
        return np.geomspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class Witness:
    """One reproducible violation: points plus both sides of the inequality."""

    hypothesis: str
    points: tuple
    lhs: float
    rhs: float

    def as_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "points": list(self.points),
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass
class AuditReport:
    """Verdicts for A1..A5 and the admissibility condition, with witnesses."""

    verdicts: dict
    basis: dict
    uniqueness_condition: str
    constants: HypothesisConstants
    witnesses: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        states = list(self.verdicts.values()) + [self.uniqueness_condition]
        return all(v in (PASS, SAMPLED_PASS, SKIPPED) for v in states)

    def witnesses_for(self, hypothesis: str) -> list:
        return [w for w in self.witnesses if w.hypothesis == hypothesis]

    def as_dict(self) -> dict:
        return {
            "verdicts": dict(self.verdicts),
            "basis": dict(self.basis),
            "uniqueness_condition": self.uniqueness_condition,
            "constants": {
                "k1": self.constants.k1,
                "mu": self.constants.mu,
                "m": self.constants.m,
                "lambda": self.constants.lam,
                "L_gamma": self.constants.L_gamma,
                "nu": self.constants.nu,
            },
            "all_pass": self.all_pass,
            "witnesses": [w.as_dict() for w in self.witnesses],
        }


def _a1_symmetry(kernel, plan):
    rng = np.random.default_rng(plan.seed)
    span = math.log10(plan.x_max) - math.log10(plan.x_min)
    x = 10.0 ** (math.log10(plan.x_min) + span * rng.random(plan.n_pairs))
    y = 10.0 ** (math.log10(plan.x_min) + span * rng.random(plan.n_pairs))
    kxy = eval_K(kernel, x, y)
    kyx = eval_K(kernel, y, x)
    bad = np.nonzero(np.abs(kxy - kyx) > 1e-12 * (1.0 + kxy))[0]
    witnesses = [
        Witness("A1", (float(x[i]), float(y[i])), float(kxy[i]), float(kyx[i]))
        for i in bad[:_MAX_WITNESSES]
    ]
    nonneg_bad = np.nonzero(kxy < 0.0)[0]
    witnesses += [
        Witness("A1", (float(x[i]), float(y[i])), float(kxy[i]), 0.0)
        for i in nonneg_bad[:_MAX_WITNESSES]
    ]
    if witnesses:
        return FAIL, "sampled", witnesses
    # every built-in family is symmetric by construction (tables are symmetrized)
    return PASS, "closed-form", []


def _a2_closed_form_sufficient(kernel, k1, mu) -> bool:
    f = kernel.family
    k1sq = k1 * k1
    if f == "constant":
        return k1sq >= kernel.k0
    if f == "shear":
        return mu >= 7.0 / 9.0 and k1sq >= kernel.k0 * 2.0 ** (7.0 / 3.0)
    if f == "smoluchowski-modified":
        return mu >= 2.0 / 3.0 and k1sq >= 4.0 * kernel.k0 / kernel.c
    if f == "sum-power":
        return mu >= max(kernel.mu1, kernel.mu2) and k1sq >= 2.0 * kernel.k0
    if f == "product-power":
        return kernel.mu1 < 1.0 and mu >= kernel.mu1 and k1sq >= kernel.k0
    if f == "custom-table":
        return k1sq >= float(kernel.table.values.max())
    return False


def _a2_envelope(kernel, consts, plan):
    if consts.k1 is None or consts.mu is None:
        # nothing to check against: no declared envelope and no closed form
        return SKIPPED, "no-constants", []
    k1, mu = consts.k1, consts.mu
    if _a2_closed_form_sufficient(kernel, k1, mu):
        return PASS, "closed-form", []
    axis = plan.axis()
    env_axis = k1 * (1.0 + axis) ** mu
    witnesses = []
    block = 256
    for lo in range(0, axis.size, block):
        xs = axis[lo : lo + block]
        kv = eval_K(kernel, xs[:, None], axis[None, :])
        env = np.outer(k1 * (1.0 + xs) ** mu, env_axis)
        bad = np.argwhere(kv > env)
        for bi, bj in bad[: max(0, _MAX_WITNESSES - len(witnesses))]:
            witnesses.append(
                Witness(
                    "A2",
                    (float(xs[bi]), float(axis[bj])),
                    float(kv[bi, bj]),
                    float(env[bi, bj]),
                )
            )
        if len(witnesses) >= _MAX_WITNESSES:
            break
    if witnesses:
        return FAIL, "sampled", witnesses
    return SAMPLED_PASS, "sampled", []


def _a3_support(frag, plan):
    if frag.family == "power-law":
        # support, non-negativity and the two normalizations hold by the
        # closed forms; alpha > -1 is enforced at construction
        return PASS, "closed-form", []
    ys = np.geomspace(plan.x_min, plan.x_max, 64)
    witnesses = []
    for y in ys:
        xs = np.geomspace(y, plan.x_max, 16)
        vals = eval_b(frag, y, xs)
        for x, v in zip(xs, vals):
            if v != 0.0 and len(witnesses) < _MAX_WITNESSES:
                witnesses.append(Witness("A3", (float(y), float(x)), float(v), 0.0))
        n_y = fragment_count(frag, y)
        if not math.isfinite(n_y):
            witnesses.append(Witness("A3", (float(y),), float(n_y), math.inf))
    if witnesses:
        return FAIL, "sampled", witnesses
    return SAMPLED_PASS, "sampled", []


def _a4_rate_envelope(frag, consts, plan):
    if consts.m is None or consts.lam is None:
        return SKIPPED, "no-constants", []
    m, lam = consts.m, consts.lam
    if frag.family == "power-law" and frag.s0 <= m and 0.0 <= frag.gamma <= 1.0 - lam:
        return PASS, "closed-form", []
    axis = plan.axis()
    s_vals = np.asarray(eval_S(frag, axis), dtype=float)
    env = m * (1.0 + axis) ** (1.0 - lam)
    bad = np.nonzero(s_vals > env)[0]
    if bad.size:
        witnesses = [
            Witness("A4", (float(axis[i]),), float(s_vals[i]), float(env[i]))
            for i in bad[:_MAX_WITNESSES]
        ]
        return FAIL, "sampled", witnesses
    return SAMPLED_PASS, "sampled", []


def _a5_lower_bound(frag, consts, plan):
    if consts.L_gamma is None or consts.nu is None:
        return SKIPPED, "no-constants", []
    L, nu = consts.L_gamma, consts.nu
    if (
        frag.family == "power-law"
        and frag.alpha <= 0.0
        and frag.gamma <= 1.0
        and nu <= frag.gamma - 1.0
        and L <= frag.s0 * (frag.alpha + 2.0)
    ):
        return PASS, "closed-form", []
    xs = np.geomspace(max(1.0, plan.x_min), plan.x_max, plan.n_points)
    q = (np.arange(plan.n_inner) + 0.5) / plan.n_inner
    witnesses = []
    for x in xs:
        ys = x * q
        gamma_vals = eval_b(frag, x, ys) * eval_S(frag, x)
        bound = L * (1.0 + x) ** nu
        bad = np.nonzero(gamma_vals < bound)[0]
        for i in bad[: max(0, _MAX_WITNESSES - len(witnesses))]:
            witnesses.append(
                Witness("A5", (float(x), float(ys[i])), float(gamma_vals[i]), float(bound))
            )
        if len(witnesses) >= _MAX_WITNESSES:
            break
    if witnesses:
        return FAIL, "sampled", witnesses
    return SAMPLED_PASS, "sampled", []


def audit(
    kernel: CoagulationKernel | None,
    frag: FragmentationSpec | None,
    consts: HypothesisConstants,
    plan: SamplePlan = SamplePlan(),
) -> AuditReport:
    """Check the configured kernels against the growth hypotheses.

    Components that are absent get "skipped" verdicts.  The report is
    advisory: the solver runs regardless of the outcome.
    """
    verdicts: dict = {}
    basis: dict = {}
    witnesses: list = []

    def record(name, result):
        verdict, how, wit = result
        verdicts[name] = verdict
        basis[name] = how
        witnesses.extend(wit)

    if kernel is None:
        verdicts["A1"] = verdicts["A2"] = SKIPPED
        basis["A1"] = basis["A2"] = "absent"
    else:
        record("A1", _a1_symmetry(kernel, plan))
        record("A2", _a2_envelope(kernel, consts, plan))

    if frag is None:
        for name in ("A3", "A4", "A5"):
            verdicts[name] = SKIPPED
            basis[name] = "absent"
    else:
        record("A3", _a3_support(frag, plan))
        record("A4", _a4_rate_envelope(frag, consts, plan))
        record("A5", _a5_lower_bound(frag, consts, plan))

    if consts.nu is not None and consts.mu is not None:
        uniqueness = PASS if 1.0 + consts.nu > consts.mu else FAIL
    elif consts.mu is not None and frag is None:
        # no fragmentation: no nu to compare, condition voids
        uniqueness = SKIPPED
    elif consts.nu is not None and kernel is None:
        uniqueness = SKIPPED
    else:
        uniqueness = SKIPPED
    return AuditReport(
        verdicts=verdicts,
        basis=basis,
        uniqueness_condition=uniqueness,
        constants=consts,
        witnesses=witnesses,
    )
