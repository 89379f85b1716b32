"""Exponential families in natural coordinates.

Every built-in family has densities ``p_theta(x) = exp(<theta, t(x)>) / Z(theta)``
with respect to a fixed reference measure ``mu``.  Carrier terms such as the
``1/x!`` of the Poisson family are folded into ``mu`` (see :class:`Support`),
so the unnormalized density is always ``exp(<theta, t(x)>)``.

Matrix-valued parameters of the centered multivariate normal family are
stored as packed upper triangles.  Gradients are partial derivatives with
respect to the packed coordinates, so off-diagonal entries carry a factor 2
and the plain Euclidean dot product of packed vectors reproduces the trace
inner product of the symmetric matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, gammaln

from .errors import DomainError
from .generator import GeneratorFn, as_vector

__all__ = [
    "Kind",
    "Support",
    "NaturalParam",
    "DualParam",
    "FamilyModel",
    "make_family",
    "cumulant",
    "partition",
    "grad_cumulant",
    "grad_partition",
    "unnormalized_density",
    "density",
    "pack_sym",
    "unpack_sym",
    "family_to_json",
    "family_from_json",
    "source_to_natural",
]

DOMAIN_MARGIN = 1e-12
LOG_2PI = math.log(2.0 * math.pi)


class Kind(str, Enum):
    EXPONENTIAL = "Exponential"
    POISSON = "Poisson"
    BERNOULLI = "Bernoulli"
    CENTERED_NORMAL_1D = "CenteredNormal1D"
    NORMAL_1D = "Normal1D"
    CENTERED_NORMAL_ND = "CenteredNormalND"

    @classmethod
    def parse(cls, name) -> "Kind":
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown family kind {name!r}")


def pack_sym(mat) -> np.ndarray:
    """Upper triangle of a symmetric matrix, row-major."""
    mat = np.asarray(mat, dtype=float)
    return mat[np.triu_indices(mat.shape[0])].copy()


def unpack_sym(coords, d: int) -> np.ndarray:
    coords = as_vector(coords)
    if coords.size != d * (d + 1) // 2:
        raise ValueError(f"expected {d * (d + 1) // 2} packed coordinates, got {coords.size}")
    mat = np.zeros((d, d))
    iu = np.triu_indices(d)
    mat[iu] = coords
    mat.T[iu] = coords
    return mat


def _packed_gradient(mat_grad: np.ndarray) -> np.ndarray:
    # d/d(packed) of a function of a symmetric matrix: off-diagonals count twice
    d = mat_grad.shape[0]
    weights = 2.0 * np.ones((d, d)) - np.eye(d)
    return pack_sym(mat_grad * weights)


def _is_spd(mat: np.ndarray) -> bool:
    if not np.all(np.isfinite(mat)):
        return False
    return bool(np.linalg.eigvalsh(mat)[0] > DOMAIN_MARGIN)


@dataclass(frozen=True)
class Support:
    """Sample space and reference measure.

    ``kind`` is one of ``halfline`` (Lebesgue on [0, inf)), ``real``
    (Lebesgue on R), ``real_n`` (Lebesgue on R^dim), ``naturals`` (counting
    measure on N weighted by ``exp(log_weight(k))``) and ``binary`` (counting
    measure on {0, 1}).
    """

    kind: str
    dim: int = 1
    log_weight: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def discrete(self) -> bool:
        return self.kind in ("naturals", "binary")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "halfline":
            return x >= 0.0
        if self.kind == "naturals":
            return (x >= 0.0) & (x == np.floor(x))
        if self.kind == "binary":
            return (x == 0.0) | (x == 1.0)
        if self.kind == "real_n":
            return np.all(np.isfinite(x), axis=-1)
        return np.isfinite(x)

    def weights(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.log_weight is None:
            return np.zeros(x.shape if self.kind != "real_n" else x.shape[:-1])
        return self.log_weight(x)


def _poisson_log_weight(k):
    return -gammaln(np.asarray(k, dtype=float) + 1.0)


@dataclass(frozen=True)
class NaturalParam:
    """A point of the natural parameter space.

    ``layout`` is ``"vector"`` or ``"sym-matrix"``; the latter stores the packed
    upper triangle of a symmetric positive-definite matrix.
    """

    coords: np.ndarray
    layout: str = "vector"

    def __post_init__(self):
        coords = as_vector(self.coords)
        if not np.all(np.isfinite(coords)):
            raise DomainError("natural parameter must be finite")
        if self.layout not in ("vector", "sym-matrix"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.layout == "sym-matrix":
            d = int(round((math.sqrt(8 * coords.size + 1) - 1) / 2))
            if d * (d + 1) // 2 != coords.size:
                raise ValueError("packed size is not triangular")
            if not _is_spd(unpack_sym(coords, d)):
                raise DomainError("matrix parameter is not positive definite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_matrix(cls, mat) -> "NaturalParam":
        return cls(pack_sym(mat), "sym-matrix")

    def matrix(self) -> np.ndarray:
        d = int(round((math.sqrt(8 * self.coords.size + 1) - 1) / 2))
        return unpack_sym(self.coords, d)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class DualParam:
    """Dual (moment) coordinates; ``generator_tag`` is ``cumulant`` or ``partition``."""

    coords: np.ndarray
    generator_tag: str = "cumulant"

    def __post_init__(self):
        coords = as_vector(self.coords)
        if not np.all(np.isfinite(coords)):
            raise DomainError("dual parameter must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class FamilyModel:
    """A natural exponential family with closed-form normalizers."""

    kind: Kind
    dim: int = 1
    support: Support = field(default=None)

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ValueError(f"invalid dim {self.dim!r}")
        if kind is not Kind.CENTERED_NORMAL_ND and self.dim != 1:
            raise ValueError(f"{kind.value} only supports dim=1")
        supports = {
            Kind.EXPONENTIAL: Support("halfline"),
            Kind.POISSON: Support("naturals", log_weight=_poisson_log_weight),
            Kind.BERNOULLI: Support("binary"),
            Kind.CENTERED_NORMAL_1D: Support("real"),
            Kind.NORMAL_1D: Support("real"),
            Kind.CENTERED_NORMAL_ND: Support("real_n", dim=int(self.dim)),
        }
        object.__setattr__(self, "support", supports[kind])

    # -- shape ---------------------------------------------------------------

    @property
    def n_params(self) -> int:
        if self.kind is Kind.NORMAL_1D:
            return 2
        if self.kind is Kind.CENTERED_NORMAL_ND:
            return self.dim * (self.dim + 1) // 2
        return 1

    @property
    def layout(self) -> str:
        return "sym-matrix" if self.kind is Kind.CENTERED_NORMAL_ND else "vector"

    def param(self, coords) -> NaturalParam:
        theta = NaturalParam(coords, self.layout)
        self.check(theta)
        return theta

    # -- domain --------------------------------------------------------------

    def in_domain(self, theta) -> bool:
        theta = as_vector(theta)
        if theta.size != self.n_params or not np.all(np.isfinite(theta)):
            return False
        if self.kind in (Kind.EXPONENTIAL, Kind.CENTERED_NORMAL_1D, Kind.NORMAL_1D):
            return bool(theta[0] > DOMAIN_MARGIN)
        if self.kind is Kind.CENTERED_NORMAL_ND:
            return _is_spd(unpack_sym(theta, self.dim))
        return True

    def check(self, theta) -> np.ndarray:
        theta = as_vector(theta)
        if not self.in_domain(theta):
            raise DomainError(f"{self.kind.value}: theta={theta.tolist()} outside natural parameter space")
        return theta

    # -- normalizers ---------------------------------------------------------

    def cumulant(self, theta) -> float:
        t = self.check(theta)
        k = self.kind
        if k is Kind.EXPONENTIAL:
            return -math.log(t[0])
        if k is Kind.POISSON:
            return math.exp(t[0])
        if k is Kind.BERNOULLI:
            return float(np.logaddexp(0.0, t[0]))
        if k is Kind.CENTERED_NORMAL_1D:
            return 0.5 * (LOG_2PI - math.log(t[0]))
        if k is Kind.NORMAL_1D:
            return 0.5 * (LOG_2PI - math.log(t[0])) + t[1] ** 2 / (2.0 * t[0])
        _, logdet = np.linalg.slogdet(unpack_sym(t, self.dim))
        return 0.5 * (self.dim * LOG_2PI - logdet)

    def partition(self, theta) -> float:
        t = self.check(theta)
        k = self.kind
        if k is Kind.EXPONENTIAL:
            return 1.0 / t[0]
        if k is Kind.BERNOULLI:
            return 1.0 + math.exp(t[0])
        if k is Kind.CENTERED_NORMAL_1D:
            return math.sqrt(2.0 * math.pi / t[0])
        if k is Kind.NORMAL_1D:
            return math.sqrt(2.0 * math.pi / t[0]) * math.exp(t[1] ** 2 / (2.0 * t[0]))
        if k is Kind.CENTERED_NORMAL_ND:
            det = np.linalg.det(unpack_sym(t, self.dim))
            return (2.0 * math.pi) ** (self.dim / 2.0) / math.sqrt(det)
        return math.exp(self.cumulant(t))

    def grad_cumulant(self, theta) -> np.ndarray:
        t = self.check(theta)
        k = self.kind
        if k is Kind.EXPONENTIAL:
            return np.array([-1.0 / t[0]])
        if k is Kind.POISSON:
            return np.array([math.exp(t[0])])
        if k is Kind.BERNOULLI:
            return np.array([float(expit(t[0]))])
        if k is Kind.CENTERED_NORMAL_1D:
            return np.array([-0.5 / t[0]])
        if k is Kind.NORMAL_1D:
            return np.array([-0.5 / t[0] - t[1] ** 2 / (2.0 * t[0] ** 2), t[1] / t[0]])
        inv = np.linalg.inv(unpack_sym(t, self.dim))
        return _packed_gradient(-0.5 * inv)

    def grad_partition(self, theta) -> np.ndarray:
        t = self.check(theta)
        k = self.kind
        if k is Kind.EXPONENTIAL:
            return np.array([-1.0 / t[0] ** 2])
        if k is Kind.POISSON:
            lam = math.exp(t[0])
            return np.array([lam * math.exp(lam)])
        if k is Kind.BERNOULLI:
            return np.array([math.exp(t[0])])
        if k is Kind.CENTERED_NORMAL_1D:
            return np.array([-math.sqrt(math.pi / 2.0) * t[0] ** -1.5])
        if k is Kind.NORMAL_1D:
            e = math.exp(t[1] ** 2 / (2.0 * t[0]))
            return np.array([
                -math.sqrt(math.pi / 2.0) * (t[0] + t[1] ** 2) * e / t[0] ** 2.5,
                math.sqrt(2.0 * math.pi) * t[1] * e / t[0] ** 1.5,
            ])
        mat = unpack_sym(t, self.dim)
        inv = np.linalg.inv(mat)
        z = (2.0 * math.pi) ** (self.dim / 2.0) / math.sqrt(np.linalg.det(mat))
        return _packed_gradient(-0.5 * z * inv)

    # -- densities -----------------------------------------------------------

    def sufficient_stat(self, x) -> np.ndarray:
        """``t(x)`` with a trailing parameter axis."""
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k is Kind.EXPONENTIAL:
            return (-x)[..., None]
        if k in (Kind.POISSON, Kind.BERNOULLI):
            return x[..., None]
        if k is Kind.CENTERED_NORMAL_1D:
            return (-0.5 * x * x)[..., None]
        if k is Kind.NORMAL_1D:
            return np.stack([-0.5 * x * x, x], axis=-1)
        outer = x[..., :, None] * x[..., None, :]
        d = self.dim
        weights = np.ones((d, d)) - 0.5 * np.eye(d)
        iu = np.triu_indices(d)
        return -(outer * weights)[..., iu[0], iu[1]]

    def log_unnormalized_density(self, theta, x) -> np.ndarray:
        """``<theta, t(x)>``; ``-inf`` outside the support."""
        t = self.check(theta)
        x = np.asarray(x, dtype=float)
        inside = self.support.contains(x)
        xs = np.where(inside[..., None], x, 0.0) if self.kind is Kind.CENTERED_NORMAL_ND else np.where(inside, x, 0.0)
        val = self.sufficient_stat(xs) @ t
        return np.where(inside, val, -np.inf)

    def log_density(self, theta, x) -> np.ndarray:
        return self.log_unnormalized_density(theta, x) - self.cumulant(theta)

    def unnormalized_density(self, theta, x):
        out = np.exp(self.log_unnormalized_density(theta, x))
        return float(out) if np.ndim(out) == 0 else out

    def density(self, theta, x):
        out = np.exp(self.log_density(theta, x))
        return float(out) if np.ndim(out) == 0 else out

    # -- generators ----------------------------------------------------------

    def sample_grid(self) -> list:
        """Interior sample points used for warm starts and sampled checks."""
        k = self.kind
        if k in (Kind.EXPONENTIAL, Kind.CENTERED_NORMAL_1D):
            return [np.array([v]) for v in np.geomspace(0.05, 20.0, 41)]
        if k in (Kind.POISSON, Kind.BERNOULLI):
            return [np.array([v]) for v in np.linspace(-6.0, 3.0, 37)]
        if k is Kind.NORMAL_1D:
            return [np.array([a, b]) for a in np.geomspace(0.1, 10.0, 9) for b in np.linspace(-3.0, 3.0, 9)]
        d = self.dim
        return [pack_sym(s * np.eye(d)) for s in np.geomspace(0.1, 10.0, 21)]

    def _dual_domain(self, which: str):
        k = self.kind
        if k in (Kind.EXPONENTIAL, Kind.CENTERED_NORMAL_1D):
            return lambda eta: bool(eta[0] < 0.0)
        if k is Kind.POISSON or (k is Kind.BERNOULLI and which == "Z"):
            return lambda eta: bool(eta[0] > 0.0)
        if k is Kind.BERNOULLI:
            return lambda eta: bool(0.0 < eta[0] < 1.0)
        if k is Kind.NORMAL_1D:
            return (lambda eta: bool(eta[0] < -0.5 * eta[1] ** 2)) if which == "F" else None
        d = self.dim

        def cone(eta):
            # eta = -1/2 Sigma (diagonal) and -Sigma (off-diagonal) up to a positive scale
            g = unpack_sym(eta, d)
            g = -(g * (0.5 * np.ones((d, d)) + 0.5 * np.eye(d)))
            return _is_spd(g)

        return cone

    def generator(self, which: str = "F") -> GeneratorFn:
        """Cumulant (``"F"``) or partition (``"Z"``) function as a :class:`GeneratorFn`."""
        if which == "F":
            value, grad = self.cumulant, self.grad_cumulant
        elif which == "Z":
            value, grad = self.partition, self.grad_partition
        else:
            raise ValueError(f"generator must be 'F' or 'Z', got {which!r}")
        return GeneratorFn(
            value=value,
            gradient=grad,
            domain=self.in_domain,
            name=f"{which}[{self.kind.value}]",
            grid=tuple(self.sample_grid()),
            dual_domain=self._dual_domain(which),
        )


def make_family(kind, dim: int = 1) -> FamilyModel:
    """Build one of the six built-in families."""
    return FamilyModel(Kind.parse(kind), dim)


def cumulant(model: FamilyModel, theta) -> float:
    return model.cumulant(theta)


def partition(model: FamilyModel, theta) -> float:
    return model.partition(theta)


def grad_cumulant(model: FamilyModel, theta) -> DualParam:
    return DualParam(model.grad_cumulant(theta), "cumulant")


def grad_partition(model: FamilyModel, theta) -> DualParam:
    return DualParam(model.grad_partition(theta), "partition")


def unnormalized_density(model: FamilyModel, theta, x):
    return model.unnormalized_density(theta, x)


def density(model: FamilyModel, theta, x):
    return model.density(theta, x)


# -- serialization -----------------------------------------------------------


def family_to_json(model: FamilyModel, theta=None) -> str:
    doc = {"kind": model.kind.value, "dim": int(model.dim)}
    if theta is not None:
        doc["theta"] = as_vector(theta).tolist()
    return json.dumps(doc, sort_keys=True)


def family_from_json(doc):
    """Parse ``{kind, dim, theta?}``; returns ``(model, theta or None)``."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    model = make_family(doc["kind"], int(doc.get("dim", 1)))
    theta = doc.get("theta")
    if theta is not None:
        theta = model.check(theta)
    return model, theta


def source_to_natural(model: FamilyModel, source) -> np.ndarray:
    """Convert a source parameterization to natural coordinates.

    Exponential: rate; Poisson: rate; Bernoulli: success probability;
    CenteredNormal1D: variance; Normal1D: (mean, variance);
    CenteredNormalND: packed covariance matrix.
    """
    s = as_vector(source)
    k = model.kind
    if k is Kind.EXPONENTIAL:
        theta = s
    elif k is Kind.POISSON:
        theta = np.log(s)
    elif k is Kind.BERNOULLI:
        theta = np.log(s / (1.0 - s))
    elif k is Kind.CENTERED_NORMAL_1D:
        theta = 1.0 / s
    elif k is Kind.NORMAL_1D:
        mu, var = s
        theta = np.array([1.0 / var, mu / var])
    else:
        theta = pack_sym(np.linalg.inv(unpack_sym(s, model.dim)))
    return model.check(theta)
