"""Exception hierarchy used across the package."""


class DampNormError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(DampNormError, ValueError):
    pass


class ConvergenceFailure(DampNormError, RuntimeError):
    pass


class UnstableSystem(DampNormError, ValueError):
    """The system matrix has an eigenvalue with real part >= -1e-12."""


class DimensionTooLarge(DampNormError, ValueError):
    pass


class SingularSystem(DampNormError, ValueError):
    pass


class DimensionMismatch(DampNormError, ValueError):
    pass


class SingularTransform(DampNormError, ValueError):
    pass


class NegativeViscosity(DampNormError, ValueError):
    pass


class LengthMismatch(DampNormError, ValueError):
    pass


class BadIndex(DampNormError, IndexError):
    pass


class NumericalInconsistency(DampNormError, ArithmeticError):
    pass


class InvalidP(DampNormError, ValueError):
    pass


class ObjectiveFailure(DampNormError, RuntimeError):
    """The objective raised or returned NaN; ``x`` holds the offending point."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class EmptySweep(DampNormError, ValueError):
    pass


class ParseError(DampNormError, ValueError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ValidationError(DampNormError, ValueError):
    def __init__(self, field, message=""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field
