"""Deterministic sectional solver and verification suite for the
continuous coagulation equation with multiple fragmentation."""

__version__ = "0.1.0"

from .audit import AuditReport, SamplePlan, audit
from .grid import Density, GridSpec, project, weighted_norm
from .kernels import (
    CoagulationKernel,
    FragmentationSpec,
    HypothesisConstants,
    breakage_partial_mass,
    eval_K,
    eval_S,
    eval_b,
    fragment_count,
    make_fragmentation,
    make_kernel,
    suggest_constants,
)
from .observables import MomentSeries, integrability_probe, moment_ladder, moments
from .oracles import ORACLE_CASES
from .solver import ControllerConfig, OperatorTables, RunReport, StepStats, assemble, evolve, rhs, step
from .stability import GronwallTrace, distance, gronwall_run, refinement_consistency

__all__ = [
    "AuditReport",
    "ControllerConfig",
    "CoagulationKernel",
    "Density",
    "FragmentationSpec",
    "GridSpec",
    "GronwallTrace",
    "HypothesisConstants",
    "MomentSeries",
    "ORACLE_CASES",
    "OperatorTables",
    "RunReport",
    "SamplePlan",
    "StepStats",
    "assemble",
    "audit",
    "breakage_partial_mass",
    "distance",
    "eval_K",
    "eval_S",
    "eval_b",
    "evolve",
    "fragment_count",
    "gronwall_run",
    "integrability_probe",
    "make_fragmentation",
    "make_kernel",
    "moment_ladder",
    "moments",
    "project",
    "refinement_consistency",
    "rhs",
    "step",
    "suggest_constants",
    "weighted_norm",
]
