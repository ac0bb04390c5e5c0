"""Exception hierarchy.

Validation errors map to CLI exit code 2, numerical errors to exit code 3.
"""


class QCBError(Exception):
    """Base class for all errors raised by qcb."""


class ValidationError(QCBError, ValueError):
    """Input failed a structural or physical invariant."""


class NumericalError(QCBError, ArithmeticError):
    """A computation produced a result outside its numerical contract."""


class NotHermitian(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NotBlockDiagonal(ValidationError):
    pass


class BasisNotAdapted(ValidationError):
    pass


class NonFiniteAmplitude(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class ModelFileError(ValidationError):
    pass


class NonRealExpectation(NumericalError):
    pass


class BoundsCollapsed(NumericalError):
    """Upper and lower kinematical bounds coincide, so a yield is undefined."""
