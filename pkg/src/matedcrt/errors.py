"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SizeError(ValueError):
    """Input too large for a quadratic-cost routine."""


class SamplingError(RuntimeError):
    """Rejection sampling ran out of attempts."""

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class StructuralError(RuntimeError):
    """Graph structure prevents the requested computation."""


class HorizonError(StructuralError):
    """The embedding window is too small for the pinned vertices."""


class BudgetError(RuntimeError):
    """A random walk exceeded its step cap."""


class StatisticsError(ValueError):
    """Not enough data for a statistical fit."""


class InvariantViolation(AssertionError):
    """An internal invariant failed; indicates a bug rather than bad input."""
