"""Shared exception types."""


class DomainError(ValueError):
    """An argument lies outside the mathematically admissible range."""


class ConvergenceError(RuntimeError):
    """An iterative routine failed to converge within its budget."""


class FitError(RuntimeError):
    """Model estimation failed for every candidate."""
