"""Exception hierarchy shared across the library.

Validation failures (bad inputs, preconditions) derive from FracsusValueError;
numerical-quality failures (non-convergence, bad fits, escapes) derive from
FracsusNumericalError.  The CLI maps the former to exit code 1 and the latter
to exit code 2.
"""


class FracsusError(Exception):
    """Base class for all library errors."""


class FracsusValueError(FracsusError, ValueError):
    """Invalid input or violated precondition."""


class FracsusNumericalError(FracsusError, RuntimeError):
    """A computation ran but did not meet its quality contract."""


class DomainError(FracsusValueError):
    """Argument outside the mathematical domain of an operation."""


class NoPreimageError(DomainError):
    """Transfer operator evaluated at a point with no real preimages."""


class SingularityError(DomainError):
    """Evaluation requested exactly at a non-removable singularity."""


class UnsupportedSideError(DomainError):
    """Closed-form route requested for a side it does not cover."""


class MethodError(FracsusValueError):
    """Requested numerical method is not applicable to the inputs."""


class FormatError(FracsusValueError):
    """Unsupported serialization pairing or malformed config."""


class EscapeError(FracsusNumericalError):
    """Critical orbit left the invariant interval (non-admissible parameter)."""


class DegenerateOrbitError(FracsusNumericalError):
    """A derivative product vanished where a sign or root was required."""


class ConvergenceError(FracsusNumericalError):
    """Iteration exhausted its budget; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DecompositionQualityError(FracsusNumericalError):
    """Spike-amplitude fit quality below the acceptance gate."""


class InsufficientDataError(FracsusNumericalError):
    """Too few usable points above the noise floor for a fit."""
