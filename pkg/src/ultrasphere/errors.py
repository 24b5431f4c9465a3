"""Exception types shared across the package."""


class UltrasphereError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(UltrasphereError, ValueError):
    pass


class OutOfRangeError(UltrasphereError, ValueError):
    pass


class ConsistencyError(UltrasphereError, RuntimeError):
    """A computed object disagrees with an independent count or identity."""


class CertificationError(UltrasphereError, RuntimeError):
    """A quadrature rule failed its exactness certificate.

    The offending exponent tuple is kept in ``monomial``.
    """

    def __init__(self, message, monomial=None):
        super().__init__(message)
        self.monomial = monomial


class NumericalInstabilityError(UltrasphereError, ArithmeticError):
    """Division near the origin lost more accuracy than tolerated at ``u``."""

    def __init__(self, message, u=None):
        super().__init__(message)
        self.u = u
