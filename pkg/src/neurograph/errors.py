"""Exception types shared across the toolkit."""


class NeurographError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(NeurographError, ValueError):
    """Input violates a documented precondition or invariant."""


class BoundsError(ValidationError):
    """Geometry falls outside the volume."""


class FormatError(NeurographError, ValueError):
    """On-disk data is malformed or inconsistent with its header."""


class TrainingError(ValidationError):
    """Training data cannot support the requested fit (e.g. one class only)."""


class CycleError(NeurographError):
    """A forest was required but the input contains a cycle."""

    def __init__(self, message, cycle=()):
        super().__init__(message)
        self.cycle = tuple(cycle)


class ConditioningError(NeurographError):
    """A linear system is too ill-conditioned to factor reliably."""
