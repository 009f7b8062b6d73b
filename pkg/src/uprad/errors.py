"""Exception hierarchy shared by every module."""


class UpradError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(UpradError, ValueError):
    """A platform coincides (or nearly so) with the target."""


class DomainError(UpradError, ValueError):
    """An argument lies outside the domain of a formula."""


class BudgetError(DomainError):
    """Noise budget has a non-positive or non-finite entry."""


class SingularFIMError(UpradError, ArithmeticError):
    """The Fisher information matrix is not numerically positive definite."""


class UnsolvableError(UpradError, RuntimeError):
    """An optimizer could not evaluate the objective anywhere it needed to."""


class SamplingError(UpradError, RuntimeError):
    """Random scenario generation kept producing invalid geometry."""
