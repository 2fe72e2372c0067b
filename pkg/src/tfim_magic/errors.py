"""Exception types. Each carries the CLI exit code it maps to."""


class MagicError(Exception):
    exit_code = 1


class CapacityError(MagicError):
    """Requested size exceeds a configured cap."""

    exit_code = 3


class NumericalError(MagicError):
    exit_code = 4


class QuadratureError(NumericalError):
    """Gauss-Legendre doubling did not converge.

    ``last`` and ``previous`` are the final two iterates.
    """

    exit_code = 4

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class FitError(NumericalError):
    """Least-squares problem is rank deficient or otherwise unusable."""


class UndefinedReferenceError(NumericalError):
    """Reference density is zero (stabilizer limit); relative error undefined."""
