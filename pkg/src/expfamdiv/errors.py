"""Exception types raised across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """A parameter or observation lies outside the domain of a function."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge.

    The last iterate is kept on ``last_iterate`` so callers can inspect where
    the solver stopped.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class IntegrationError(RuntimeError):
    """Numerical integration did not reach the requested tolerance."""


class NotConvexError(ValueError):
    """A generator failed its sampled convexity certificate."""
