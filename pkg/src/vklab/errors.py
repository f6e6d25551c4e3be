"""Exception types and the explicit infinite marker."""


class VklabError(Exception):
    """Base class for all library errors."""


class DomainError(VklabError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonIntegrableError(VklabError, ValueError):
    """A kernel power is not integrable on the requested interval."""


class QuadratureError(VklabError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance.

    The partial estimate and its error bound are kept on the exception.
    """

    def __init__(self, message, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class InadmissibleError(VklabError, ValueError):
    """The (p, gamma) pair violates the hypotheses of the finite-horizon bound."""


class BoundInapplicableError(VklabError, ValueError):
    """The uniform-in-time bound does not apply (infinite moment condition)."""


class EmptySchemeError(VklabError, ValueError):
    """The measure carries no mass on the discretisation range."""


class WrongSchemeError(VklabError, TypeError):
    """A simulation routine received a kernel it cannot handle."""


class DivergedPathError(VklabError, ArithmeticError):
    """A simulated path left the numerically safe range."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class ConfigError(VklabError, ValueError):
    """A study configuration is malformed or violates a precondition."""


class Infinite:
    """Marker for a divergent integral.

    A single instance, :data:`INFINITE`, is returned instead of ``float('inf')``
    so that a divergent quantity cannot silently enter arithmetic.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __reduce__(self):
        return (Infinite, ())


INFINITE = Infinite()


def is_infinite(value):
    return value is INFINITE
