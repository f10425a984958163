"""Exception hierarchy.

Grouping matters for the CLI exit codes: parameter/domain problems map to
exit 2, solver and flow failures to exit 1, identity check failures to 3.
"""


class OnofriLabError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(OnofriLabError, ValueError):
    """A parameter is outside its documented domain."""


class ResolutionError(InvalidParameterError):
    """Requested resolution is too small to be meaningful."""


class MassOutOfRangeError(InvalidParameterError):
    """Keller-Segel mass must lie in (0, 8*pi)."""


class UnboundedVariationError(InvalidParameterError):
    """Perturbation has unbounded variation on the truncated domain."""


class GeometryMismatchError(OnofriLabError, ValueError):
    """Field, weight and geometry arguments do not belong together."""


class UnsupportedGeometryError(OnofriLabError, ValueError):
    """Operation undefined for this geometry kind."""


class ConstantFieldError(OnofriLabError, ValueError):
    """Quotient undefined: the field has (numerically) vanishing gradient."""


class NeedsSolutionError(OnofriLabError, ValueError):
    """Identity only holds at Euler-Lagrange solutions; none was supplied."""


class InvariantViolationError(OnofriLabError, RuntimeError):
    """An internal pointwise invariant failed beyond tolerance."""


class SolverError(OnofriLabError, RuntimeError):
    """Base class for numerical failures (CLI exit code 1)."""


class NewtonDivergedError(SolverError):
    """Newton iteration failed to converge; carries the iterate history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class NotConvergedError(SolverError):
    """Fixed-point or optimizer iteration exhausted its budget."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class NoSignChangeError(SolverError):
    """Bifurcation scan found no eigenvalue sign change in the window."""


class StepFailureError(SolverError):
    """Time step underflowed while trying to keep the update stable."""


class BlowupError(SolverError):
    """Flow iterate left the trust region (sup |f| > 1e3)."""
