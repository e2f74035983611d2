"""Exception types shared across the package."""


class HoppError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(HoppError):
    """Mismatched or impossible model dimensions (K, L, N, input length)."""


class InvalidIndexError(HoppError):
    """A term references an input index outside [1, K]."""


class NumericOverflowError(HoppError):
    """A stimulus or output became non-finite during evaluation."""


class DivergenceError(HoppError):
    """Training produced a non-finite weight update."""


class InvalidInputError(HoppError):
    """An operation received arguments violating its preconditions."""


class WdbcParseError(HoppError):
    """The data file could not be parsed; carries the offending line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class InvalidViewError(HoppError):
    """A feature view names an unknown column or statistic."""


class InvalidBoundaryError(HoppError):
    """A boundary is open, degenerate, or self-intersecting."""


class LogDomainError(HoppError):
    """A probability table entry is not strictly positive, so logs are undefined."""
