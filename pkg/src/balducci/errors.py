"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a mathematical function."""


class SeriesError(RuntimeError):
    """A series or continued fraction hit its term cap.

    This signals an internal range bug, never an expected condition.
    """


class TableError(ValueError):
    """Mortality data violates a table invariant."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class AgeRangeError(LookupError):
    """Age queried outside the data a model holds."""


class TruncationError(ValueError):
    """Probability mass lies beyond the model's truncation age."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""
