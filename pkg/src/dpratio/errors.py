"""Exception hierarchy.

Every error carries a short kebab-case ``code`` which the command line
prints next to the message.
"""


class DPRatioError(Exception):
    """Base class for all domain and numerical errors raised by dpratio."""

    code = "dpratio-error"


class DomainError(DPRatioError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""

    code = "domain"


class SingularityError(DomainError):
    """A closed-form expression has a pole at (or too close to) the input."""

    code = "singularity"


class DegenerateScaleError(DomainError):
    code = "degenerate-scale"


class OutOfValidityError(DomainError):
    """A calibration theorem is applied outside its stated parameter range."""

    code = "out-of-validity"


class InvalidDebiasError(DomainError):
    code = "invalid-debias"


class DegenerateDataError(DomainError):
    """The data make an interval or variance estimate undefined."""

    code = "degenerate-data"


class PreconditionError(DomainError):
    code = "precondition"


class NumericalError(DPRatioError, ArithmeticError):
    """An iterative routine failed to converge."""

    code = "numerical"


class RangeError(DPRatioError, OverflowError):
    """The result does not fit in double precision."""

    code = "range"


class ConsistencyError(DPRatioError, ArithmeticError):
    """A probability escaped [0, 1] by more than rounding noise."""

    code = "internal-consistency"


class ConfigError(DPRatioError, ValueError):
    """A simulation configuration is malformed.

    ``key`` names the first offending entry.
    """

    code = "config"

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
