"""Convex conjugation and the canonical divergence of dually flat spaces.

Conjugates are computed numerically: ``F*(eta)`` is obtained by solving
``grad F(theta) = eta`` with a damped Newton iteration, so any
:class:`~expfamdiv.generator.GeneratorFn` can be dualized, including the
conjugate of a conjugate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .divergences import bregman, fenchel_young
from .errors import ConvergenceError, DomainError
from .families import FamilyModel
from .generator import GeneratorFn, as_vector, fd_hessian
from .oracle import IntegrationScheme, density_fn, shannon_entropy

__all__ = [
    "solve_dual",
    "conjugate",
    "conjugate_generator",
    "ConjugatePair",
    "conjugate_pair",
    "double_conjugate_check",
    "CanonicalDivergence",
    "canonical_divergence",
    "negentropy_check",
    "affine_reparam_check",
    "legendre_boundary_diagnostic",
]

MAX_ITER = 200
MAX_HALVINGS = 60
RESIDUAL_TOL = 1e-10


def _warm_start(gen: GeneratorFn, eta: np.ndarray) -> np.ndarray:
    best, best_res = None, math.inf
    for theta in gen.grid:
        theta = as_vector(theta)
        if theta.size != eta.size or not gen.domain(theta):
            continue
        try:
            res = float(np.linalg.norm(gen.grad(theta) - eta))
        except (DomainError, ConvergenceError, FloatingPointError):
            continue
        if math.isfinite(res) and res < best_res:
            best, best_res = theta, res
    if best is None:
        raise ConvergenceError(f"{gen.name}: no usable grid point for eta={eta.tolist()}")
    return best


def solve_dual(gen: GeneratorFn, eta, tol: float = RESIDUAL_TOL, theta0=None) -> np.ndarray:
    """Solve ``grad gen(theta) = eta`` by damped Newton.

    The Newton system uses a central-difference Hessian of the gradient.  A
    trial step is halved (at most 60 times) until it stays in the domain and
    lowers either the residual norm or ``gen(theta) - <theta, eta>``.  The
    residual target is ``tol * max(1, |eta|)``.

    Raises
    ------
    ConvergenceError
        On a failed line search or after 200 iterations; ``last_iterate``
        holds the final point.
    """
    eta = as_vector(eta)
    if gen.dual_domain is not None and not gen.dual_domain(eta):
        raise ConvergenceError(f"{gen.name}: eta={eta.tolist()} outside the gradient image", None)
    theta = _warm_start(gen, eta) if theta0 is None else gen.check(theta0)
    target = tol * max(1.0, float(np.linalg.norm(eta)))

    def objective(t):
        return gen(t) - float(np.dot(t, eta))

    r = gen.grad(theta) - eta
    res = float(np.linalg.norm(r))
    obj = objective(theta)
    for _ in range(MAX_ITER):
        if res <= target:
            return theta
        hess = fd_hessian(gen.grad, theta)
        try:
            step = np.linalg.solve(hess, r)
        except np.linalg.LinAlgError:
            step = r
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = theta - lam * step
            if gen.domain(trial):
                try:
                    r_t = gen.grad(trial) - eta
                    obj_t = objective(trial)
                except (DomainError, ConvergenceError):
                    r_t = None
                if r_t is not None and np.all(np.isfinite(r_t)):
                    res_t = float(np.linalg.norm(r_t))
                    if res_t < res or obj_t < obj:
                        break
            lam *= 0.5
        else:
            raise ConvergenceError(f"{gen.name}: line search failed at residual {res:.3e}", theta)
        theta, r, res, obj = trial, r_t, res_t, obj_t
    if res <= target:
        return theta
    raise ConvergenceError(f"{gen.name}: no convergence after {MAX_ITER} iterations (residual {res:.3e})", theta)


def conjugate(gen: GeneratorFn, eta) -> float:
    """Legendre-Fenchel conjugate ``sup_theta <theta, eta> - gen(theta)``."""
    eta = as_vector(eta)
    theta = solve_dual(gen, eta)
    return float(np.dot(theta, eta) - gen(theta))


def conjugate_generator(gen: GeneratorFn) -> GeneratorFn:
    """The conjugate as a generator; its gradient is the inverse dual map."""

    def in_dual(eta):
        if gen.dual_domain is not None:
            return gen.dual_domain(eta)
        try:
            solve_dual(gen, eta)
        except (ConvergenceError, DomainError):
            return False
        return True

    grid = []
    for theta in gen.grid:
        try:
            grid.append(gen.grad(theta))
        except DomainError:
            continue

    def dual_dual(theta):
        return gen.domain(theta)

    return GeneratorFn(
        value=lambda eta: conjugate(gen, eta),
        gradient=lambda eta: solve_dual(gen, eta),
        domain=in_dual,
        name=f"{gen.name}*",
        grid=tuple(grid),
        dual_domain=dual_dual,
    )


@dataclass(frozen=True)
class ConjugatePair:
    """A convex generator and its conjugate with the two coordinate maps."""

    primal: GeneratorFn
    dual: GeneratorFn

    def to_dual(self, theta) -> np.ndarray:
        return self.primal.grad(theta)

    def to_primal(self, eta) -> np.ndarray:
        return solve_dual(self.primal, eta)

    def dual_domain(self, eta) -> bool:
        return self.dual.domain(as_vector(eta))


def conjugate_pair(gen: GeneratorFn, dual: Optional[GeneratorFn] = None) -> ConjugatePair:
    """Pair ``gen`` with its conjugate (numerical unless ``dual`` is given)."""
    return ConjugatePair(gen, dual if dual is not None else conjugate_generator(gen))


def double_conjugate_check(gen: GeneratorFn, theta) -> float:
    """``|F**(theta) - F(theta)|`` with both conjugations done by the solver."""
    theta = gen.check(theta)
    star = conjugate_generator(gen)
    return abs(conjugate(star, theta) - gen(theta))


class CanonicalDivergence(NamedTuple):
    bregman: float
    fenchel_young: float
    dual_bregman: float
    dual_fenchel_young: float

    @property
    def value(self) -> float:
        return self.bregman

    @property
    def spread(self) -> float:
        return max(self) - min(self)


def canonical_divergence(pair: ConjugatePair, theta_p, theta_q) -> CanonicalDivergence:
    """The canonical divergence evaluated four ways.

    ``B_F(tp:tq)``, ``Y_{F,F*}(tp:eq)``, ``B_{F*}(eq:ep)`` and
    ``Y_{F*,F}(eq:tp)`` with ``e = grad F(t)``.
    """
    F, Fs = pair.primal, pair.dual
    tp, tq = F.check(theta_p), F.check(theta_q)
    ep, eq = pair.to_dual(tp), pair.to_dual(tq)
    return CanonicalDivergence(
        bregman(F, tp, tq),
        fenchel_young(F, Fs, tp, eq),
        bregman(Fs, eq, ep),
        fenchel_young(Fs, F, eq, tp),
    )


def negentropy_check(model: FamilyModel, theta, scheme: Optional[IntegrationScheme] = None) -> float:
    """``|F*(grad F(theta)) + H(p_theta)|`` with the entropy integrated numerically.

    The entropy is relative to the family's reference measure.
    """
    F = model.generator("F")
    theta = model.check(theta)
    fstar = conjugate(F, F.grad(theta))
    entropy = shannon_entropy(density_fn(model, theta, normalized=True), scheme)
    return abs(fstar + entropy)


def affine_reparam_check(gen: GeneratorFn, A, b, c, d, theta1, theta2) -> float:
    """``|B_F(t1:t2) - B_Fbar(tb1:tb2)|`` for ``Fbar(tb) = F(A tb + b) + <c, tb> + d``.

    ``t = A tb + b``; ``c`` is a vector and ``d`` a scalar.
    """
    t1, t2 = gen.check(theta1), gen.check(theta2)
    n = t1.size
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(n, n)
    b = as_vector(b) * np.ones(n)
    c = as_vector(c) * np.ones(n)
    d = float(d)
    if abs(np.linalg.det(A)) < 1e-14:
        raise ValueError("A must be invertible")

    def forward(tb):
        return A @ tb + b

    bar = GeneratorFn(
        value=lambda tb: gen.value(forward(tb)) + float(np.dot(c, tb)) + d,
        gradient=lambda tb: A.T @ gen.grad(forward(tb)) + c,
        domain=lambda tb: gen.domain(forward(tb)),
        name=f"affine({gen.name})",
    )
    tb1 = np.linalg.solve(A, t1 - b)
    tb2 = np.linalg.solve(A, t2 - b)
    return abs(bregman(gen, t1, t2) - bregman(bar, tb1, tb2))


def legendre_boundary_diagnostic(gen: GeneratorFn, theta, boundary,
                                 distances: Sequence[float] = (1e-2, 1e-4, 1e-6)):
    """Directional derivatives approaching a boundary point.

    Samples ``d/dl gen(l theta + (1-l) boundary)`` at ``l`` in ``distances``
    (relative to the segment) and reports whether they decrease monotonically,
    the numerical footprint of the Legendre-type blow-up.  Diagnostic only.

    Returns
    -------
    (monotone, derivatives)
    """
    theta, boundary = as_vector(theta), as_vector(boundary)
    direction = theta - boundary
    derivs = []
    for lam in distances:
        point = boundary + lam * direction
        derivs.append(float(np.dot(gen.grad(point), direction)))
    monotone = all(b < a for a, b in zip(derivs, derivs[1:]))
    return monotone, derivs
