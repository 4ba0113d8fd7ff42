"""Run configuration: a single JSON document with a closed schema.

Unknown keys are rejected and every violated constraint is reported (not
just the first), so a bad configuration fails with one actionable
message.  The canonical form (defaults applied) is echoed into
report.json and reloads to an identical configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audit import SamplePlan
from .errors import ConfigError
from .grid import GridSpec, monodisperse_profile, read_density_csv
from .kernels import (
    CoagulationKernel,
    FragmentationSpec,
    HypothesisConstants,
    make_fragmentation,
    make_kernel,
)
from .solver import ControllerConfig

_TOP_KEYS = {
    "kernel", "fragmentation", "constants", "grid", "initial", "time",
    "truncation", "dust_policy", "output_dir", "seed", "moment_orders",
    "perturbation", "audit",
}
_KERNEL_KEYS = {"family", "k0", "c", "mu1", "mu2", "x_nodes", "values"}
_FRAG_KEYS = {"family", "s0", "gamma", "alpha"}
_CONST_KEYS = {"k1", "mu", "m", "lambda", "L_gamma", "nu"}
_GRID_KEYS = {"x_min", "x_max", "n_cells", "pivot_rule"}
_INITIAL_KEYS = {"profile", "params", "csv"}
_TIME_KEYS = {"t_end", "snapshots", "rtol", "atol", "safety"}
_PERT_KEYS = {"epsilon", "tau_disc"}
_AUDIT_KEYS = {"x_min", "x_max", "n_points", "n_pairs", "n_inner"}

_PROFILE_PARAM_KEYS = {
    "exponential": {"prefactor", "decay"},
    "monodisperse": {"x0", "number"},
}

DEFAULTS = {
    "kernel": None,
    "fragmentation": None,
    "constants": "suggest",
    "grid": {"x_min": 1e-3, "x_max": 1e3, "n_cells": 256, "pivot_rule": "arithmetic"},
    "initial": {"profile": "exponential", "params": {"prefactor": 1.0, "decay": 1.0}},
    "time": {"t_end": 1.0, "snapshots": 11, "rtol": 1e-6, "atol": 1e-12, "safety": 0.9},
    "truncation": "conservative",
    "dust_policy": "remove",
    "output_dir": "out",
    "seed": 0,
    "moment_orders": [0.0, 1.0, 2.0],
    "perturbation": {"epsilon": 1e-3, "tau_disc": 0.05},
    "audit": {"x_min": 1e-6, "x_max": 1e6, "n_points": 4096, "n_pairs": 10000, "n_inner": 64},
}


def _check_keys(block: dict, allowed: set, path: str, errors: list) -> None:
    for key in block:
        if key not in allowed:
            errors.append(f"{path}: unknown key {key!r}")


def _merged(block, default):
    if block is None:
        return json.loads(json.dumps(default))
    out = json.loads(json.dumps(default))
    out.update(block)
    return out


@dataclass
class ScenarioConfig:
    """Validated configuration plus the resolved model objects."""

    raw: dict
    kernel: CoagulationKernel | None
    frag: FragmentationSpec | None
    declared_constants: HypothesisConstants | None
    grid: GridSpec
    initial_kind: str
    initial_params: dict
    times: np.ndarray
    t_end: float
    ctrl: ControllerConfig
    truncation: str
    dust_policy: str
    output_dir: str
    seed: int
    moment_orders: tuple
    epsilon: float
    tau_disc: float
    audit_plan: SamplePlan

    def canonical(self) -> dict:
        return json.loads(json.dumps(self.raw))

    def resolved_constants(self) -> HypothesisConstants:
        """Declared constants, or the closed-form suggestion for presets.

        Suggestion is per side and lenient: a side with no admissible
        closed-form envelope (custom family, or exponents outside the
        admissible range) comes back as None fields, and the audit
        reports the hypotheses it cannot check as skipped.
        """
        if self.declared_constants is not None:
            return self.declared_constants
        from .errors import UnsupportedFamilyError
        from .kernels import suggest_fragmentation_constants, suggest_kernel_constants

        k1 = mu = m = lam = nu = L_gamma = None
        if self.kernel is not None:
            try:
                k1, mu = suggest_kernel_constants(self.kernel)
            except UnsupportedFamilyError:
                pass
        if self.frag is not None:
            try:
                m, lam, nu, L_gamma = suggest_fragmentation_constants(self.frag)
            except UnsupportedFamilyError:
                pass
        return HypothesisConstants(k1=k1, mu=mu, m=m, lam=lam, L_gamma=L_gamma, nu=nu)

    def initial_profile(self):
        """Callable profile for projection (None when loading from CSV)."""
        if self.initial_kind == "exponential":
            pref = self.initial_params["prefactor"]
            decay = self.initial_params["decay"]
            return lambda x: pref * np.exp(-decay * np.asarray(x, dtype=float))
        if self.initial_kind == "monodisperse":
            return monodisperse_profile(
                self.grid, self.initial_params["x0"], self.initial_params["number"]
            )
        return None

    def initial_density(self):
        from .grid import project

        if self.initial_kind == "csv":
            d = read_density_csv(self.initial_params["csv"])
            if not d.grid.same_as(self.grid):
                raise ConfigError(
                    "initial.csv grid does not match the configured grid block"
                )
            return d
        return project(self.initial_profile(), self.grid)


def _parse_kernel(block, errors) -> CoagulationKernel | None:
    if block is None:
        return None
    if not isinstance(block, dict):
        errors.append("kernel: must be an object or null")
        return None
    _check_keys(block, _KERNEL_KEYS, "kernel", errors)
    family = block.get("family")
    if family is None:
        errors.append("kernel.family: required")
        return None
    params = {k: v for k, v in block.items() if k != "family" and k in _KERNEL_KEYS}
    try:
        return make_kernel(family, **params)
    except (ValueError, TypeError, KeyError) as exc:
        errors.append(f"kernel: {exc}")
        return None


def _parse_frag(block, errors) -> FragmentationSpec | None:
    if block is None:
        return None
    if not isinstance(block, dict):
        errors.append("fragmentation: must be an object or null")
        return None
    _check_keys(block, _FRAG_KEYS, "fragmentation", errors)
    family = block.get("family", "powerlaw-frag")
    params = {k: v for k, v in block.items() if k != "family"}
    try:
        return make_fragmentation(family, **params)
    except (ValueError, TypeError) as exc:
        errors.append(f"fragmentation: {exc}")
        return None


def _parse_constants(block, errors) -> HypothesisConstants | None:
    if block == "suggest" or block is None:
        return None
    if not isinstance(block, dict):
        errors.append('constants: must be "suggest" or an object')
        return None
    _check_keys(block, _CONST_KEYS, "constants", errors)
    kwargs = {
        "k1": block.get("k1"),
        "mu": block.get("mu"),
        "m": block.get("m"),
        "lam": block.get("lambda"),
        "L_gamma": block.get("L_gamma"),
        "nu": block.get("nu"),
    }
    try:
        return HypothesisConstants(**kwargs)
    except ValueError as exc:
        errors.append(f"constants: {exc}")
        return None


def _parse_grid(block, errors) -> GridSpec | None:
    block = _merged(block, DEFAULTS["grid"])
    _check_keys(block, _GRID_KEYS, "grid", errors)
    try:
        return GridSpec(
            x_min=float(block["x_min"]),
            x_max=float(block["x_max"]),
            n_cells=int(block["n_cells"]),
            pivot_rule=block.get("pivot_rule", "arithmetic"),
        ), block
    except (ValueError, TypeError) as exc:
        errors.append(f"grid: {exc}")
        return None, block


def _parse_initial(block, errors, grid):
    block = block if block is not None else json.loads(json.dumps(DEFAULTS["initial"]))
    if not isinstance(block, dict):
        errors.append("initial: must be an object")
        return "exponential", dict(DEFAULTS["initial"]["params"]), DEFAULTS["initial"]
    _check_keys(block, _INITIAL_KEYS, "initial", errors)
    if "csv" in block:
        if "profile" in block or "params" in block:
            errors.append("initial: csv and profile are mutually exclusive")
        path = block["csv"]
        if not isinstance(path, str):
            errors.append("initial.csv: must be a path string")
        return "csv", {"csv": path}, {"csv": path}
    profile = block.get("profile", "exponential")
    if profile not in _PROFILE_PARAM_KEYS:
        errors.append(
            f"initial.profile: unknown profile {profile!r}; expected one of "
            f"{sorted(_PROFILE_PARAM_KEYS)} or a csv path"
        )
        return "exponential", dict(DEFAULTS["initial"]["params"]), block
    params = block.get("params") or {}
    _check_keys(params, _PROFILE_PARAM_KEYS[profile], "initial.params", errors)
    if profile == "exponential":
        full = {"prefactor": 1.0, "decay": 1.0}
        full.update(params)
        if full["prefactor"] < 0.0:
            errors.append("initial.params.prefactor: must be >= 0")
        if full["decay"] <= 0.0:
            errors.append("initial.params.decay: must be > 0")
    else:
        full = {"x0": None, "number": 1.0}
        full.update(params)
        if full["x0"] is None:
            errors.append("initial.params.x0: required for the monodisperse profile")
        elif grid is not None and not (grid.x_min <= full["x0"] <= grid.x_max):
            errors.append("initial.params.x0: outside the grid span")
        if full["number"] <= 0.0:
            errors.append("initial.params.number: must be > 0")
    return profile, full, {"profile": profile, "params": full}


def _parse_time(block, errors):
    block = _merged(block, DEFAULTS["time"])
    _check_keys(block, _TIME_KEYS, "time", errors)
    t_end = block["t_end"]
    if not isinstance(t_end, (int, float)) or t_end < 0.0:
        errors.append("time.t_end: must be a number >= 0")
        t_end = 0.0
    snapshots = block["snapshots"]
    times = np.array([0.0])
    if isinstance(snapshots, int):
        if snapshots < 1:
            errors.append("time.snapshots: must be >= 1")
        elif t_end > 0.0:
            times = np.linspace(0.0, float(t_end), max(2, snapshots))
    elif isinstance(snapshots, (list, tuple)):
        arr = np.asarray(snapshots, dtype=float)
        if arr.size == 0 or arr[0] != 0.0 or np.any(np.diff(arr) <= 0.0) or arr[-1] != t_end:
            errors.append("time.snapshots: list must start at 0, increase strictly, end at t_end")
        else:
            times = arr
    else:
        errors.append("time.snapshots: must be an integer count or a list of times")
    for name, lo in (("rtol", 0.0), ("atol", 0.0)):
        if not isinstance(block[name], (int, float)) or block[name] <= lo:
            errors.append(f"time.{name}: must be > {lo}")
    if not (0.0 < block["safety"] <= 1.0):
        errors.append("time.safety: must lie in (0, 1]")
    ctrl = ControllerConfig(
        rtol=float(block["rtol"]), atol=float(block["atol"]), safety=float(block["safety"])
    )
    return times, float(t_end), ctrl, block


def _echo_kernel(kernel: CoagulationKernel | None):
    if kernel is None:
        return None
    out = {"family": kernel.family, "k0": kernel.k0}
    if kernel.family == "smoluchowski-modified":
        out["c"] = kernel.c
    if kernel.family in ("sum-power", "product-power"):
        out["mu1"] = kernel.mu1
        out["mu2"] = kernel.mu2
    if kernel.family == "custom-table":
        out["x_nodes"] = kernel.table.x_nodes.tolist()
        out["values"] = kernel.table.values.tolist()
    return out


def _echo_frag(frag: FragmentationSpec | None):
    if frag is None:
        return None
    return {"family": frag.family, "s0": frag.s0, "gamma": frag.gamma, "alpha": frag.alpha}


def _echo_constants(constants: HypothesisConstants | None):
    if constants is None:
        return "suggest"
    pairs = {
        "k1": constants.k1, "mu": constants.mu, "m": constants.m,
        "lambda": constants.lam, "L_gamma": constants.L_gamma, "nu": constants.nu,
    }
    return {k: v for k, v in pairs.items() if v is not None}


def load_config_dict(doc: dict) -> ScenarioConfig:
    """Validate a configuration document and resolve the model objects."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    errors: list = []
    _check_keys(doc, _TOP_KEYS, "config", errors)

    kernel = _parse_kernel(doc.get("kernel"), errors)
    frag = _parse_frag(doc.get("fragmentation"), errors)
    if doc.get("kernel") is None and doc.get("fragmentation") is None:
        errors.append("config: at least one of kernel and fragmentation must be present")

    constants = _parse_constants(doc.get("constants", "suggest"), errors)
    grid, grid_echo = _parse_grid(doc.get("grid"), errors)
    initial_kind, initial_params, initial_echo = _parse_initial(doc.get("initial"), errors, grid)
    times, t_end, ctrl, time_echo = _parse_time(doc.get("time"), errors)

    truncation = doc.get("truncation", DEFAULTS["truncation"])
    if truncation not in ("conservative", "classical"):
        errors.append('truncation: must be "conservative" or "classical"')

    dust_policy = doc.get("dust_policy", DEFAULTS["dust_policy"])
    if dust_policy not in ("remove", "lump"):
        errors.append('dust_policy: must be "remove" or "lump"')

    output_dir = doc.get("output_dir", DEFAULTS["output_dir"])
    if not isinstance(output_dir, str) or not output_dir:
        errors.append("output_dir: must be a non-empty string")

    seed = doc.get("seed", DEFAULTS["seed"])
    if not isinstance(seed, int):
        errors.append("seed: must be an integer")
        seed = 0

    orders_raw = doc.get("moment_orders", DEFAULTS["moment_orders"])
    orders: tuple = ()
    if not isinstance(orders_raw, (list, tuple)) or not all(
        isinstance(v, (int, float)) and v >= 0 for v in orders_raw
    ):
        errors.append("moment_orders: must be a list of numbers >= 0")
    else:
        merged = sorted({0.0, 1.0} | {float(v) for v in orders_raw})
        orders = tuple(merged)

    pert = _merged(doc.get("perturbation"), DEFAULTS["perturbation"])
    _check_keys(pert, _PERT_KEYS, "perturbation", errors)
    if not isinstance(pert["epsilon"], (int, float)) or pert["epsilon"] < 0.0:
        errors.append("perturbation.epsilon: must be >= 0")
    if not isinstance(pert["tau_disc"], (int, float)) or pert["tau_disc"] < 0.0:
        errors.append("perturbation.tau_disc: must be >= 0")

    audit_block = _merged(doc.get("audit"), DEFAULTS["audit"])
    _check_keys(audit_block, _AUDIT_KEYS, "audit", errors)
    audit_plan = None
    if not errors:
        try:
            audit_plan = SamplePlan(seed=seed, **{k: audit_block[k] for k in _AUDIT_KEYS})
        except ConfigError as exc:
            errors.append(f"audit: {exc}")

    if errors:
        raise ConfigError(
            "invalid configuration ({} problem{}):\n  - {}".format(
                len(errors), "s" if len(errors) != 1 else "", "\n  - ".join(errors)
            )
        )

    canonical = {
        "kernel": _echo_kernel(kernel),
        "fragmentation": _echo_frag(frag),
        "constants": _echo_constants(constants),
        "grid": grid_echo,
        "initial": initial_echo,
        "time": time_echo,
        "truncation": truncation,
        "dust_policy": dust_policy,
        "output_dir": output_dir,
        "seed": seed,
        "moment_orders": list(orders),
        "perturbation": pert,
        "audit": audit_block,
    }
    return ScenarioConfig(
        raw=canonical,
        kernel=kernel,
        frag=frag,
        declared_constants=constants,
        grid=grid,
        initial_kind=initial_kind,
        initial_params=initial_params,
        times=times,
        t_end=t_end,
        ctrl=ctrl,
        truncation=truncation,
        dust_policy=dust_policy,
        output_dir=output_dir,
        seed=seed,
        moment_orders=orders,
        epsilon=float(pert["epsilon"]),
        tau_disc=float(pert["tau_disc"]),
        audit_plan=audit_plan,
    )


def load_config(path) -> ScenarioConfig:
    """Load and validate a JSON configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON (line {exc.lineno}, column {exc.colno}: {exc.msg})")
    return load_config_dict(doc)
