"""Exception types shared across the package.

Everything raised on purpose derives from FlowCurvError so callers can
catch library failures without swallowing programming errors.
"""


class FlowCurvError(Exception):
    """Base class for all errors raised by this package."""


class ModelSyntaxError(FlowCurvError):
    """Malformed model or expression text.

    Carries the source text and the character offset at which the
    problem was detected.
    """

    def __init__(self, message, source, position):
        self.source = source
        self.position = position
        super().__init__(f"{message} (offset {position})")


class UndeclaredSymbolError(FlowCurvError):
    """An expression references a name that is neither a state variable
    nor a declared parameter."""


class NonAutonomousError(FlowCurvError):
    """An expression references the time symbol t; only autonomous
    systems are supported."""


class ModelDefinitionError(FlowCurvError):
    """Structurally invalid model: bad dimension, missing or duplicate
    equations, unknown builtin, unknown parameter override."""


class EvaluationDomainError(FlowCurvError):
    """An elementary function was evaluated outside its real domain
    (ln or sqrt of a non-positive value, non-integer power of a
    non-positive base)."""


class FieldOverflowError(FlowCurvError):
    """Field evaluation produced a non-finite component at a finite
    point."""


class UndefinedCurvatureError(FlowCurvError):
    """Curvature is undefined where the velocity vanishes (fixed
    point)."""


class UndefinedTorsionError(FlowCurvError):
    """Torsion is undefined where velocity and acceleration are
    collinear."""


class IntegrationError(FlowCurvError):
    """Time integration failed; .last_time holds the last time at which
    the state was still valid."""

    def __init__(self, message, last_time=None):
        self.last_time = last_time
        super().__init__(message)


class StepUnderflowError(IntegrationError):
    """Adaptive step size shrank below the resolvable limit."""


class DivergenceError(IntegrationError):
    """The state left the finite range during integration."""


class ConvergenceError(FlowCurvError):
    """An iterative search (limit cycle, Newton projection) did not
    converge within its iteration budget."""


class VanishingGradientError(FlowCurvError):
    """Newton projection hit a point where the scalar's gradient is
    numerically zero."""
