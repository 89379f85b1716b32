"""Parameter-side divergences induced by convex generators.

All functions take a :class:`~expfamdiv.generator.GeneratorFn` (or a
:class:`~expfamdiv.families.FamilyModel` for the family-specific identities)
and natural parameters given as floats, sequences or
:class:`~expfamdiv.families.NaturalParam`.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError
from .families import FamilyModel
from .generator import GeneratorFn, as_vector

__all__ = [
    "Skew",
    "bregman",
    "jensen_skewed",
    "jensen",
    "jensen_scaled",
    "kappa",
    "fenchel_young",
    "duo_bregman",
    "scalar_kl",
    "BZDecomposition",
    "bz_decomposition",
    "mixed_alpha_div",
    "mixed_kl",
    "mixed_bhattacharyya",
]


class Skew(Enum):
    """Exact branch selectors for the scaled divergences.

    Floats are also accepted wherever a skew is expected; ``0.0``, ``0.5``
    and ``1.0`` then select the same branches by exact comparison.
    """

    LIMIT0 = 0.0
    HALF = 0.5
    LIMIT1 = 1.0


def _branch(alpha):
    """Return ``(branch, value)`` with branch in {"0", "half", "1", "general"}."""
    if isinstance(alpha, Skew):
        return {Skew.LIMIT0: "0", Skew.HALF: "half", Skew.LIMIT1: "1"}[alpha], alpha.value
    a = float(alpha)
    if not math.isfinite(a):
        raise ValueError(f"skew parameter must be finite, got {alpha!r}")
    if a == 0.0:
        return "0", a
    if a == 1.0:
        return "1", a
    if a == 0.5:
        return "half", a
    return "general", a


def bregman(gen: GeneratorFn, theta1, theta2) -> float:
    """``B(theta1 : theta2) = g(theta1) - g(theta2) - <theta1 - theta2, grad g(theta2)>``."""
    t1, t2 = gen.check(theta1), gen.check(theta2)
    return float(gen(t1) - gen(t2) - np.dot(t1 - t2, gen.grad(t2)))


def jensen_skewed(gen: GeneratorFn, theta1, theta2, alpha: float) -> float:
    """Skewed Jensen gap ``a g(t1) + (1-a) g(t2) - g(a t1 + (1-a) t2)``.

    ``alpha`` is not restricted to (0, 1) here; outside that interval the
    value is a (negative) extrapolated gap and the mixture point must still
    lie in the domain.
    """
    a = float(alpha.value if isinstance(alpha, Skew) else alpha)
    t1, t2 = gen.check(theta1), gen.check(theta2)
    mix = a * t1 + (1.0 - a) * t2
    return float(a * gen(t1) + (1.0 - a) * gen(t2) - gen(mix))


def jensen(gen: GeneratorFn, theta1, theta2) -> float:
    """Symmetric Jensen divergence, the alpha = 1/2 skewed gap."""
    return jensen_skewed(gen, theta1, theta2, 0.5)


def kappa(alpha: float) -> float:
    """Alternative rescaling factor normalised so that ``kappa(1/2) = 1``."""
    a = float(alpha)
    return 1.0 / (a * (1.0 - a) * 4.0 ** (4.0 * a * (1.0 - a)))


def jensen_scaled(gen: GeneratorFn, theta1, theta2, alpha, scaling: str = "standard") -> float:
    """Scaled skewed Jensen divergence, extended by Bregman limits.

    ``scaling="standard"`` divides by ``alpha (1 - alpha)`` (4 J at alpha=1/2);
    ``scaling="kappa"`` multiplies by :func:`kappa` instead (J at alpha=1/2).
    Both reduce to ``B(t1:t2)`` at alpha=0 and ``B(t2:t1)`` at alpha=1.
    """
    branch, a = _branch(alpha)
    if branch == "0":
        return bregman(gen, theta1, theta2)
    if branch == "1":
        return bregman(gen, theta2, theta1)
    if scaling == "kappa":
        if branch == "half":
            return jensen(gen, theta1, theta2)
        return kappa(a) * jensen_skewed(gen, theta1, theta2, a)
    if scaling != "standard":
        raise ValueError(f"unknown scaling {scaling!r}")
    if branch == "half":
        return 4.0 * jensen(gen, theta1, theta2)
    return jensen_skewed(gen, theta1, theta2, a) / (a * (1.0 - a))


def fenchel_young(F: GeneratorFn, Fstar: GeneratorFn, theta, eta) -> float:
    """``Y(theta : eta) = F(theta) + F*(eta) - <theta, eta>``."""
    t, e = F.check(theta), Fstar.check(eta)
    return float(F(t) + Fstar(e) - np.dot(t, e))


def duo_bregman(F1: GeneratorFn, F2: GeneratorFn, theta1, theta2,
                check_points: Optional[Sequence] = None, slack: float = 1e-12) -> float:
    """Duo Bregman pseudo-divergence ``F1(t1) - F2(t2) - <t1 - t2, grad F2(t2)>``.

    Requires the dominance ``F1 >= F2``; it is checked at both arguments, at
    points of the segment between them and at ``check_points`` (defaults to
    ``F2.grid``).  A violation raises :class:`DomainError`.
    """
    t1, t2 = F2.check(theta1), F2.check(theta2)
    F1.check(t1)
    pts = [t1, t2] + [s * t1 + (1 - s) * t2 for s in np.linspace(0.1, 0.9, 9)]
    pts += list(F2.grid if check_points is None else check_points)
    for p in pts:
        p = as_vector(p)
        if F1.domain(p) and F2.domain(p):
            f1, f2 = F1(p), F2(p)
            if f1 < f2 - slack * max(1.0, abs(f2)):
                raise DomainError(f"duo Bregman needs F1 >= F2; F1={f1!r} < F2={f2!r} at {p.tolist()}")
    return float(F1(t1) - F2(t2) - np.dot(t1 - t2, F2.grad(t2)))


def scalar_kl(a: float, b: float) -> float:
    """Scalar KL divergence ``a log(a/b) + b - a`` between positive reals."""
    if not (a > 0 and b > 0):
        raise DomainError(f"scalar KL needs positive arguments, got {a!r}, {b!r}")
    return float(a * math.log(a / b) + b - a)


class BZDecomposition(NamedTuple):
    conformal: float
    scalar: float
    total: float


def bz_decomposition(model: FamilyModel, theta1, theta2) -> BZDecomposition:
    """Split ``B_Z(theta2 : theta1)`` into ``Z(theta1) B_F(theta2 : theta1)``
    plus the scalar KL between the two partition values."""
    F = model.generator("F")
    z1, z2 = model.partition(theta1), model.partition(theta2)
    conformal = float(z1 * bregman(F, theta2, theta1))
    scalar = scalar_kl(z1, z2)
    return BZDecomposition(conformal, scalar, conformal + scalar)


# -- mixed normalized / unnormalized divergences ----------------------------


def mixed_kl(model: FamilyModel, theta1, theta2) -> float:
    """KL between normalized ``p_theta1`` and unnormalized ``p~_theta2``.

    Equals the duo Bregman divergence ``B_{Z-1, F}(theta2 : theta1)``.
    """
    F = model.generator("F")
    zm1 = model.generator("Z").shifted(-1.0, name=f"Z-1[{model.kind.value}]")
    return duo_bregman(zm1, F, theta2, theta1)


def mixed_alpha_div(model: FamilyModel, theta1, theta2, alpha) -> float:
    """Alpha-divergence between normalized ``p_theta1`` and unnormalized ``p~_theta2``.

    ``int p^a q~^(1-a) = Z(a t1 + (1-a) t2) / Z(t1)^a``, so the value is
    ``(a + (1-a) Z(t2) - Z(mix) / Z(t1)^a) / (a (1-a))``.  Limits: KL at
    alpha=1, reverse KL at alpha=0.
    """
    branch, a = _branch(alpha)
    if branch == "1":
        return mixed_kl(model, theta1, theta2)
    if branch == "0":
        # KL(p~_t2 : p_t1) = <t2 - t1, grad Z(t2)> + F(t1) Z(t2) + 1 - Z(t2)
        t1, t2 = model.check(theta1), model.check(theta2)
        z2 = model.partition(t2)
        f1 = model.cumulant(t1)
        grad_z2 = model.grad_partition(t2)
        return float(np.dot(t2 - t1, grad_z2) + f1 * z2 + 1.0 - z2)
    t1, t2 = model.check(theta1), model.check(theta2)
    mix = a * t1 + (1.0 - a) * t2
    if not model.in_domain(mix):
        raise DomainError(f"mixture point {mix.tolist()} outside parameter space")
    coeff = math.exp(model.cumulant(mix) - a * model.cumulant(t1))
    return (a + (1.0 - a) * model.partition(t2) - coeff) / (a * (1.0 - a))


def mixed_bhattacharyya(model: FamilyModel, theta1, theta2, alpha) -> float:
    """Signed skewed Bhattacharyya distance ``-log int p_t1^a p~_t2^(1-a)``.

    Equals ``a F(t1) - F(a t1 + (1-a) t2)``; negative whenever the
    unnormalized argument carries enough mass.
    """
    _, a = _branch(alpha)
    t1, t2 = model.check(theta1), model.check(theta2)
    mix = a * t1 + (1.0 - a) * t2
    if not model.in_domain(mix):
        raise DomainError(f"mixture point {mix.tolist()} outside parameter space")
    return float(a * model.cumulant(t1) - model.cumulant(mix))
