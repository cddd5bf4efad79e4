"""Exception types raised across the package."""


class KSplineError(Exception):
    """Base class for all package errors."""


class ManifoldError(KSplineError):
    """A point that should lie on the manifold does not."""


class DegeneratePoint(ManifoldError):
    """Point outside the neighbourhood where the closest-point map is defined."""


class GeodesicFailure(KSplineError):
    """A connecting geodesic could not be constructed (cut locus, non-convergence)."""


class StencilTooWide(KSplineError):
    """The grid has too few nodes for the requested finite-difference stencil."""


class SingularSystem(KSplineError):
    """The assembled linear system is numerically singular."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class StepRejected(KSplineError):
    """Energy kept increasing after the allowed number of time-step halvings."""


class NotConverged(KSplineError):
    """Step budget exhausted before the stopping criterion was met.

    The best state reached and the full energy trace are attached so callers
    can still inspect or serialize them.
    """

    def __init__(self, message, state=None, trace=None):
        super().__init__(message)
        self.state = state
        self.trace = trace


class InvalidP(KSplineError, ValueError):
    """Spectral parameter outside the closed right half-plane minus the origin."""


class FormulaMismatch(KSplineError):
    """A closed-form determinant disagrees with the directly computed one."""


class ConfigError(KSplineError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None, line=None):
        where = ""
        if field is not None:
            where = f"{field}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)
        self.field = field
        self.line = line
