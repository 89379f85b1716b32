"""Convex generator functions with value and gradient evaluation.

A :class:`GeneratorFn` bundles a scalar function on an open parameter domain
with its gradient.  When no closed-form gradient is supplied, central finite
differences are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError

__all__ = ["GeneratorFn", "as_vector", "fd_gradient", "fd_hessian", "fd_step"]


def as_vector(theta) -> np.ndarray:
    """Coerce a scalar, sequence or parameter object to a 1-D float array."""
    coords = getattr(theta, "coords", theta)
    return np.atleast_1d(np.asarray(coords, dtype=float)).ravel()


def fd_step(theta: np.ndarray) -> np.ndarray:
    return np.maximum(1e-5, 1e-7 * np.abs(theta))


def fd_gradient(f: Callable[[np.ndarray], float], theta: np.ndarray) -> np.ndarray:
    """Central-difference gradient with step ``max(1e-5, 1e-7 |theta|)``."""
    theta = as_vector(theta)
    h = fd_step(theta)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h[i]
        grad[i] = (f(theta + e) - f(theta - e)) / (2.0 * h[i])
    return grad


def fd_hessian(grad: Callable[[np.ndarray], np.ndarray], theta: np.ndarray) -> np.ndarray:
    """Symmetrized central-difference Jacobian of a gradient map."""
    theta = as_vector(theta)
    h = fd_step(theta)
    n = theta.size
    hess = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        hess[:, i] = (grad(theta + e) - grad(theta - e)) / (2.0 * h[i])
    return 0.5 * (hess + hess.T)


def _accept_all(theta: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(theta)))


@dataclass(frozen=True)
class GeneratorFn:
    """A strictly convex candidate function on an open domain.

    Parameters
    ----------
    value : callable
        Maps a 1-D parameter array to a float.
    gradient : callable, optional
        Closed-form gradient. Finite differences are used when omitted.
    domain : callable
        Open-set membership predicate.
    name : str
        Label used in reports.
    grid : sequence of arrays
        Sample points inside the domain. Used for solver warm starts and
        sampled checks.
    dual_domain : callable, optional
        Membership predicate for the gradient image, when known.
    """

    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Callable[[np.ndarray], bool] = _accept_all
    name: str = "g"
    grid: Sequence[np.ndarray] = field(default_factory=tuple)
    dual_domain: Optional[Callable[[np.ndarray], bool]] = None

    def check(self, theta) -> np.ndarray:
        theta = as_vector(theta)
        if not np.all(np.isfinite(theta)) or not self.domain(theta):
            raise DomainError(f"{self.name}: parameter {theta.tolist()} outside domain")
        return theta

    def __call__(self, theta) -> float:
        return float(self.value(self.check(theta)))

    def grad(self, theta) -> np.ndarray:
        theta = self.check(theta)
        if self.gradient is not None:
            return as_vector(self.gradient(theta))
        return fd_gradient(self.value, theta)

    def hess(self, theta) -> np.ndarray:
        theta = self.check(theta)
        return fd_hessian(self.grad, theta)

    @property
    def has_closed_gradient(self) -> bool:
        return self.gradient is not None

    def shifted(self, offset: float, name: Optional[str] = None) -> "GeneratorFn":
        """Return ``g + offset`` (same gradient)."""
        value = self.value
        return GeneratorFn(
            value=lambda t: value(t) + offset,
            gradient=self.gradient,
            domain=self.domain,
            name=name or f"{self.name}{offset:+g}",
            grid=self.grid,
            dual_domain=self.dual_domain,
        )
