"""Exception types raised by the nbapprox library."""


class NBApproxError(Exception):
    """Base class for every library error."""


class DomainError(NBApproxError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateSampleError(NBApproxError, ArithmeticError):
    """An estimator cannot be evaluated on the given dataset."""
