"""Exception hierarchy.

The CLI maps these onto exit codes: ``InputError`` -> 2, ``Violation`` -> 1,
``BudgetExceeded`` -> 3.
"""


class LatticeError(Exception):
    """Base class for all errors raised by this package."""


class InputError(LatticeError, ValueError):
    """Invalid input: bad basis, bad norm string, wrong dimension, ..."""


class SingularBasis(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class InvalidNorm(InputError):
    pass


class NotPlanar(InputError):
    pass


class NotEuclidean(InputError):
    pass


class KOutOfRange(InputError):
    pass


class NonConvexNormRouting(InputError):
    """Witness search needs a strictly convex norm unless a witness is given."""


class BudgetExceeded(LatticeError):
    pass


class Violation(LatticeError):
    """A verified statement turned out false. Should never fire."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


class ClaimViolated(Violation):
    pass


class CountViolation(Violation):
    pass
