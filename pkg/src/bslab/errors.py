"""Exception hierarchy.

Validation-type errors (bad inputs, out-of-range requests) and numerical
errors (convergence, conditioning, oracle disagreement) are kept in two
separate branches so the CLI can map them onto distinct exit codes.
"""


class LabError(Exception):
    """Base class for all errors raised by bslab."""


class ValidationError(LabError, ValueError):
    """Input failed a precondition."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of the operation."""


class InputError(ValidationError):
    """Malformed input such as an asymmetric matrix or a corrupted basis."""


class RangeError(ValidationError):
    """Requested sample lies outside the range where a result is meaningful."""


class NumericalError(LabError, ArithmeticError):
    """A computation ran but could not deliver a trustworthy result."""


class BracketError(NumericalError):
    """Root finder was given an interval without a sign change."""


class AccuracyError(NumericalError):
    """Estimated discretisation error exceeds the requested tolerance."""


class ConditioningError(NumericalError):
    """Overlap matrix too ill-conditioned; prune the basis."""


class ConsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree."""


class DegeneracyError(NumericalError):
    """Top eigenvalue not isolated although it must be simple."""


class SingularityError(NumericalError):
    """1 - L(k) is numerically singular at the requested k."""

    def __init__(self, message, smallest_trustworthy_k=None):
        super().__init__(message)
        self.smallest_trustworthy_k = smallest_trustworthy_k


class ConvergenceError(NumericalError):
    """A scan or iteration violated a property it must satisfy when converged."""
