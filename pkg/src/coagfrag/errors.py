"""Exception hierarchy shared across the package."""


class CoagFragError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CoagFragError):
    """Invalid or incomplete run configuration."""


class EvaluationError(CoagFragError):
    """Kernel or rate evaluation produced a non-finite or out-of-domain value."""


class ProjectionError(CoagFragError):
    """A closed-form profile could not be integrated onto the grid."""


class GridMismatchError(CoagFragError):
    """Operation received densities living on different grids."""


class AssemblyError(CoagFragError):
    """Operator table assembly failed (typically a memory budget violation)."""


class SolverError(CoagFragError):
    """Time integration failed."""


class StiffnessError(SolverError):
    """Step size collapsed below the hard floor; the problem is too stiff
    for the explicit stepper on this domain."""


class UnsupportedFamilyError(CoagFragError):
    """Closed-form constants or integrals were requested for a custom family."""
