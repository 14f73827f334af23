"""Exception hierarchy.

Each family maps to one CLI exit code (see ``shadowtrace.cli``).
"""


class ShadowError(Exception):
    """Base class for all shadowtrace errors."""

    exit_code = 1


class ValidationError(ShadowError, ValueError):
    """Bad user input: malformed curve spec, non-positive distance, etc."""

    exit_code = 2


class RegularityError(ValidationError):
    """The escaping curve has (numerically) vanishing speed."""

    def __init__(self, message, t_min=None, speed_min=None):
        super().__init__(message)
        self.t_min = t_min
        self.speed_min = speed_min


class NumericalError(ShadowError, ArithmeticError):
    """An integration, quadrature or root search failed to meet tolerance."""

    exit_code = 3


class BracketError(NumericalError):
    pass


class DegenerateSingularityError(NumericalError):
    """alpha stays numerically zero over a whole interval of samples."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class HypothesisError(ShadowError):
    """A theorem's hypothesis does not hold for the given curve or distance."""

    exit_code = 4
