class BellmanError(Exception):
    """Base class for errors raised by this package."""


class DomainError(BellmanError, ValueError):
    """A point lies outside the region where a formula is defined."""


class ParameterError(BellmanError, ValueError):
    """A scalar parameter (eps, delta, depth, ...) is out of its admissible range."""


class NumericalError(BellmanError, ArithmeticError):
    """An iterative or tolerance-checked computation failed."""


class UnsupportedShapeError(BellmanError, TypeError):
    """The function representation is outside what an operation supports."""


class PreconditionError(BellmanError, ValueError):
    """An input violates a documented precondition (e.g. a BMO norm bound)."""
