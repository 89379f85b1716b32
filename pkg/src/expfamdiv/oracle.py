"""Statistical divergences computed directly from density evaluations.

This module never touches cumulant or partition functions: every quantity is
an integral (or a sum, for counting measures) of pointwise density values.
It is the brute-force reference against which the closed-form parameter
divergences are checked.

Continuous 1-D supports are integrated with adaptive Gauss-Kronrod quadrature
(:func:`scipy.integrate.quad`) after mapping the infinite range onto a finite
one; ``[0, inf)`` uses ``x = t / (1 - t)`` and ``R`` uses ``x = t / (1 - t^2)``.
Low-dimensional ``R^d`` uses a tensor Gauss-Legendre rule on the same map and
higher dimensions use importance-sampled Monte-Carlo.
"""

from __future__ import annotations

import json
import math
import warnings
import zlib
from dataclasses import asdict, dataclass, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate as sp_integrate

from .errors import IntegrationError
from .families import FamilyModel, Kind, Support, unpack_sym
from .divergences import _branch

__all__ = [
    "IntegrationScheme",
    "DensityFn",
    "density_fn",
    "default_scheme",
    "integrate",
    "bhattacharyya_coeff",
    "bhattacharyya_scaled",
    "renyi_div",
    "kl_extended",
    "kl_pointwise_bregman",
    "alpha_div",
    "hellinger_sq",
    "cross_entropy_extended",
    "entropy_extended",
    "shannon_entropy",
    "KLDecomposition",
    "klekl_decomposition",
]

SCHEME_KINDS = ("adaptive-quadrature", "tensor-quadrature", "monte-carlo", "series-sum")


@dataclass(frozen=True)
class IntegrationScheme:
    """Numerical integration settings.

    Discrete supports are always summed; ``kind`` selects the method on
    continuous supports.  ``max_evals`` doubles as the Monte-Carlo sample
    count.
    """

    kind: str = "adaptive-quadrature"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_evals: int = 1_000_000
    seed: int = 0
    tail_cut: float = 1e-12

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown integration scheme {self.kind!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.tail_cut > 0):
            raise ValueError("tolerances must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, doc) -> "IntegrationScheme":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(**doc)


def default_scheme(support: Support, seed: int = 0) -> IntegrationScheme:
    if support.discrete:
        return IntegrationScheme("series-sum", seed=seed)
    if support.kind == "real_n":
        kind = "tensor-quadrature" if support.dim <= 3 else "monte-carlo"
        return IntegrationScheme(kind, seed=seed)
    return IntegrationScheme("adaptive-quadrature", seed=seed)


@dataclass(frozen=True)
class DensityFn:
    """A non-negative density given by its logarithm.

    ``precision`` optionally records the precision matrix of a centered
    Gaussian shape; Monte-Carlo integration uses it to build a proposal.
    """

    log_eval: Callable[[np.ndarray], np.ndarray]
    support: Support
    normalized: bool = False
    precision: Optional[np.ndarray] = None

    def __call__(self, x):
        return np.exp(self.log_eval(x))

    def scaled(self, factor: float) -> "DensityFn":
        """``factor * density``; the result is unnormalized unless factor is 1."""
        shift = math.log(factor)
        log_eval = self.log_eval
        return replace(self, log_eval=lambda x: log_eval(x) + shift,
                       normalized=self.normalized and factor == 1.0)


def _scalar_inner(kind: Kind, theta: np.ndarray):
    """``<theta, t(x)>`` for a scalar ``x`` without array overhead."""
    a = float(theta[0])
    if kind is Kind.EXPONENTIAL:
        return lambda x: -a * x
    if kind in (Kind.POISSON, Kind.BERNOULLI):
        return lambda x: a * x
    if kind is Kind.CENTERED_NORMAL_1D:
        return lambda x: -0.5 * a * x * x
    b = float(theta[1])
    return lambda x: (-0.5 * a * x + b) * x


def density_fn(model: FamilyModel, theta, normalized: bool = True) -> DensityFn:
    """Wrap ``p_theta`` (or ``p~_theta``) of a built-in family as a :class:`DensityFn`."""
    theta = model.check(theta)
    shift = model.cumulant(theta) if normalized else 0.0
    if model.kind is Kind.CENTERED_NORMAL_ND:
        mat = unpack_sym(theta, model.dim)

        def log_eval(x):
            # <theta, t(x)> = -x^T Theta x / 2 for the packed statistic
            x = np.asarray(x, dtype=float)
            return -0.5 * np.sum((x @ mat) * x, axis=-1) - shift
    else:
        # scalar fast path: the integrators call this once per node
        support, stat = model.support, model.sufficient_stat

        inner = _scalar_inner(model.kind, theta)

        def log_eval(x):
            if isinstance(x, float):
                return inner(x) - shift if bool(support.contains(x)) else -math.inf
            x = np.asarray(x, dtype=float)
            inside = support.contains(x)
            val = stat(np.where(inside, x, 0.0)) @ theta - shift
            return np.where(inside, val, -np.inf)
    precision = unpack_sym(theta, model.dim) if model.kind is Kind.CENTERED_NORMAL_ND else None
    return DensityFn(log_eval, model.support, normalized, precision)


# -- integration -------------------------------------------------------------


def _real_map(t):
    with np.errstate(divide="ignore"):
        one_m = 1.0 - t * t
        x = t / one_m
        log_jac = np.log1p(t * t) - 2.0 * np.log(one_m)
    return x, log_jac


def _combine(fx, log_w, log):
    """Multiply an integrand value by a measure weight given in log space."""
    with np.errstate(over="ignore", invalid="ignore"):
        if log:
            out = np.exp(fx + log_w)
        else:
            out = fx * np.exp(log_w)
    return np.where(np.isfinite(out), out, 0.0) if np.ndim(out) else (out if math.isfinite(out) else 0.0)


def _adaptive(f, support, scheme, log):
    lo = 0.0 if support.kind == "halfline" else -1.0

    def g(t):
        if t <= lo or t >= 1.0:
            return 0.0
        if support.kind == "halfline":
            x, log_jac = t / (1.0 - t), -2.0 * math.log1p(-t)
        else:
            one_m = 1.0 - t * t
            x, log_jac = t / one_m, math.log1p(t * t) - 2.0 * math.log(one_m)
        fx = float(f(x))
        try:
            out = math.exp(fx + log_jac) if log else fx * math.exp(log_jac)
        except OverflowError:
            return 0.0
        return out if math.isfinite(out) else 0.0

    limit = max(50, min(5000, scheme.max_evals // 21))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = sp_integrate.quad(g, lo, 1.0, epsabs=scheme.abs_tol, epsrel=scheme.rel_tol,
                                limit=limit, full_output=1)
    value, err, info = res[:3]
    flagged = len(res) > 3
    tol = max(scheme.abs_tol, scheme.rel_tol * abs(value))
    if info["neval"] > scheme.max_evals or (flagged and err > tol):
        raise IntegrationError(
            f"adaptive quadrature did not converge: value={value!r} err={err!r} neval={info['neval']}"
        )
    return float(value), float(err)


def _series(f, support, scheme, log):
    if support.kind == "binary":
        k = np.array([0.0, 1.0])
        terms = _combine(f(k), support.weights(k), log)
        return float(np.sum(terms)), 0.0
    total = 0.0
    block = 64
    start = 0
    while True:
        if start >= scheme.max_evals:
            raise IntegrationError(f"series did not converge within {scheme.max_evals} terms")
        k = np.arange(start, start + block, dtype=float)
        terms = _combine(f(k), support.weights(k), log)
        total += float(np.sum(terms))
        mags = np.abs(terms)
        last, before = mags[-1], mags[-2]
        start += block
        if last == 0.0 and before == 0.0:
            return total, 0.0
        if before > 0.0 and last < before:
            # geometric bound on the discarded tail; term ratios keep shrinking
            r = last / before
            tail = last * r / (1.0 - r)
            if tail <= scheme.tail_cut * abs(total):
                return total, tail


def _tensor(f, support, scheme, log, precision=None):
    d = support.dim
    # whiten: x = C y with C C^T = precision^-1, so the mapped grid sees a round bump
    if precision is None:
        C, log_det = np.eye(d), 0.0
    else:
        C = np.linalg.cholesky(np.linalg.inv(precision))
        log_det = float(np.sum(np.log(np.diag(C))))
    n = 16
    prev = None
    while True:
        if n ** d > scheme.max_evals:
            raise IntegrationError(f"tensor quadrature exceeded {scheme.max_evals} evaluations (d={d})")
        t, w = np.polynomial.legendre.leggauss(n)
        x1, lj1 = _real_map(t)
        # a unit Gaussian is resolved faster on the map stretched by 2
        x1, lj1 = 2.0 * x1, lj1 + math.log(2.0)
        lw1 = np.log(w) + lj1
        grids = np.meshgrid(*([x1] * d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1) @ C.T
        lws = np.meshgrid(*([lw1] * d), indexing="ij")
        log_w = sum(l.ravel() for l in lws) + log_det
        value = 0.0
        chunk = 200_000
        for s in range(0, pts.shape[0], chunk):
            value += float(np.sum(_combine(f(pts[s:s + chunk]), log_w[s:s + chunk], log)))
        if prev is not None:
            err = abs(value - prev)
            if err <= max(scheme.abs_tol, scheme.rel_tol * abs(value)):
                return value, err
        prev = value
        n = int(n * 1.5)


def _gaussian_proposal(precision, dim):
    if precision is None:
        precision = np.eye(dim)
    chol = np.linalg.cholesky(np.linalg.inv(precision))
    _, logdet = np.linalg.slogdet(precision)
    log_norm = 0.5 * (logdet - dim * math.log(2.0 * math.pi))

    def sample(rng, n):
        return rng.standard_normal((n, dim)) @ chol.T

    def log_pdf(x):
        return log_norm - 0.5 * np.sum((x @ precision) * x, axis=-1)

    return sample, log_pdf


def _monte_carlo(f, support, scheme, log, proposal_precision, tag):
    d = support.dim
    sample, log_pdf = _gaussian_proposal(proposal_precision, d)
    seq = np.random.SeedSequence([int(scheme.seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode())])
    rng = np.random.default_rng(seq)
    n = int(scheme.max_evals)
    chunk = 100_000
    s1 = s2 = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        x = sample(rng, m)
        vals = _combine(f(x), -log_pdf(x), log)
        s1 += float(np.sum(vals))
        s2 += float(np.sum(vals * vals))
        done += m
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def integrate(f, support: Support, scheme: Optional[IntegrationScheme] = None, *,
              log: bool = False, proposal_precision=None, tag: str = "integrate"):
    """Integrate ``f`` against the reference measure of ``support``.

    Parameters
    ----------
    f : callable
        Vectorized integrand. With ``log=True`` it returns the logarithm of a
        non-negative integrand, which is exponentiated only after the measure
        weight and change-of-variables Jacobian have been added.
    support : Support
    scheme : IntegrationScheme, optional
        Defaults to :func:`default_scheme`.
    proposal_precision : array, optional
        Precision of the centered Gaussian proposal for Monte-Carlo; tensor
        quadrature uses it to whiten the integrand first.
    tag : str
        Mixed into the Monte-Carlo seed so distinct call sites draw
        independent, reproducible streams.

    Returns
    -------
    (value, err_estimate)
    """
    scheme = scheme or default_scheme(support)
    if support.discrete:
        return _series(f, support, scheme, log)
    if support.kind == "real_n":
        if scheme.kind == "monte-carlo":
            return _monte_carlo(f, support, scheme, log, proposal_precision, tag)
        return _tensor(f, support, scheme, log, proposal_precision)
    if scheme.kind == "monte-carlo":
        raise ValueError("monte-carlo is only available on R^d supports")
    return _adaptive(f, support, scheme, log)


# -- divergences -------------------------------------------------------------


def _check_pair(p: DensityFn, q: DensityFn):
    if p.support.kind != q.support.kind or p.support.dim != q.support.dim:
        raise ValueError("densities must share a support")


def _proposal(p: DensityFn, q: DensityFn):
    """Broader of two centered Gaussian shapes, shrunk to dominate both."""
    if p.precision is None or q.precision is None:
        return p.precision if q.precision is None else q.precision
    broad, other = (p.precision, q.precision)
    if np.linalg.det(q.precision) < np.linalg.det(p.precision):
        broad, other = other, broad
    # generalized eigenvalues of (other, broad): shrink so that prop <= both
    chol = np.linalg.cholesky(broad)
    inv_chol = np.linalg.inv(chol)
    lam_min = np.linalg.eigvalsh(inv_chol @ other @ inv_chol.T)[0]
    return min(1.0, lam_min) * broad


def _integrate_pair(fn, p, q, scheme, log, tag):
    _check_pair(p, q)
    return integrate(lambda x: fn(p.log_eval(x), q.log_eval(x)), p.support, scheme,
                     log=log, proposal_precision=_proposal(p, q), tag=tag)


def _mass(p: DensityFn, scheme, tag="mass"):
    if p.normalized:
        return 1.0
    return integrate(p.log_eval, p.support, scheme, log=True,
                     proposal_precision=p.precision, tag=tag)[0]


def bhattacharyya_coeff(p: DensityFn, q: DensityFn, alpha: float,
                        scheme: Optional[IntegrationScheme] = None) -> float:
    """Skewed Bhattacharyya coefficient ``int p^a q^(1-a) dmu``."""
    a = float(alpha.value if hasattr(alpha, "value") else alpha)
    return _integrate_pair(lambda lp, lq: a * lp + (1.0 - a) * lq, p, q, scheme, True, "bhattacharyya")[0]


def kl_extended(p: DensityFn, q: DensityFn, scheme: Optional[IntegrationScheme] = None) -> float:
    """KL divergence extended to positive densities, ``int p log(p/q) + q - p``."""

    def fn(lp, lq):
        pv, qv = np.exp(lp), np.exp(lq)
        with np.errstate(invalid="ignore"):
            cross = np.where(pv > 0.0, pv * (lp - lq), 0.0)
        return cross + qv - pv

    return _integrate_pair(fn, p, q, scheme, False, "kl")[0]


def kl_pointwise_bregman(p: DensityFn, q: DensityFn, scheme: Optional[IntegrationScheme] = None) -> float:
    """Integral of the scalar Bregman divergence of ``u log u - u`` between density values."""

    def f_skl(lu, u):
        return np.where(u > 0.0, u * lu, 0.0) - u

    def fn(lp, lq):
        pv, qv = np.exp(lp), np.exp(lq)
        with np.errstate(invalid="ignore"):
            return f_skl(lp, pv) - f_skl(lq, qv) - np.where(pv != qv, (pv - qv) * lq, 0.0)

    return _integrate_pair(fn, p, q, scheme, False, "kl-bregman")[0]


def bhattacharyya_scaled(p: DensityFn, q: DensityFn, alpha,
                         scheme: Optional[IntegrationScheme] = None) -> float:
    """``-log rho_a / (a (1 - a))``; KL at alpha=1 and reverse KL at alpha=0."""
    branch, a = _branch(alpha)
    if branch == "1":
        return kl_extended(p, q, scheme)
    if branch == "0":
        return kl_extended(q, p, scheme)
    rho = bhattacharyya_coeff(p, q, a, scheme)
    if branch == "half":
        return -4.0 * math.log(rho)
    return -math.log(rho) / (a * (1.0 - a))


def renyi_div(p: DensityFn, q: DensityFn, alpha, scheme: Optional[IntegrationScheme] = None) -> float:
    """Renyi divergence ``log(rho_a) / (a - 1)`` for alpha not in {0, 1}."""
    branch, a = _branch(alpha)
    if branch in ("0", "1"):
        raise ValueError("Renyi divergence is defined here for alpha not in {0, 1}")
    return math.log(bhattacharyya_coeff(p, q, a, scheme)) / (a - 1.0)


def alpha_div(p: DensityFn, q: DensityFn, alpha, scheme: Optional[IntegrationScheme] = None) -> float:
    """Alpha-divergence between positive (possibly unnormalized) densities."""
    branch, a = _branch(alpha)
    if branch == "1":
        return kl_extended(p, q, scheme)
    if branch == "0":
        return kl_extended(q, p, scheme)
    if branch == "half":
        return 4.0 * hellinger_sq(p, q, scheme)

    def fn(lp, lq):
        return a * np.exp(lp) + (1.0 - a) * np.exp(lq) - np.exp(a * lp + (1.0 - a) * lq)

    return _integrate_pair(fn, p, q, scheme, False, "alpha")[0] / (a * (1.0 - a))


def hellinger_sq(p: DensityFn, q: DensityFn, scheme: Optional[IntegrationScheme] = None) -> float:
    """Squared Hellinger distance ``1/2 int (sqrt p - sqrt q)^2``."""

    def fn(lp, lq):
        return 0.5 * (np.exp(0.5 * lp) - np.exp(0.5 * lq)) ** 2

    return _integrate_pair(fn, p, q, scheme, False, "hellinger")[0]


def cross_entropy_extended(p: DensityFn, q: DensityFn, scheme: Optional[IntegrationScheme] = None) -> float:
    """``int (p log(1/q) + q) dmu - 1``."""

    def fn(lp, lq):
        pv = np.exp(lp)
        with np.errstate(invalid="ignore"):
            return np.where(pv > 0.0, -pv * lq, 0.0) + np.exp(lq)

    return _integrate_pair(fn, p, q, scheme, False, "cross-entropy")[0] - 1.0


def entropy_extended(p: DensityFn, scheme: Optional[IntegrationScheme] = None) -> float:
    """Extended entropy, the self cross-entropy."""
    return cross_entropy_extended(p, p, scheme)


def shannon_entropy(p: DensityFn, scheme: Optional[IntegrationScheme] = None) -> float:
    """``-int p log p dmu`` for a normalized density (relative to the reference measure)."""

    def fn(lp):
        pv = np.exp(lp)
        with np.errstate(invalid="ignore"):
            return np.where(pv > 0.0, -pv * lp, 0.0)

    return integrate(lambda x: fn(p.log_eval(x)), p.support, scheme,
                     proposal_precision=p.precision, tag="entropy")[0]


class KLDecomposition(NamedTuple):
    Zp: float
    Zq: float
    kl_normalized: float
    total: float


def klekl_decomposition(p: DensityFn, q: DensityFn,
                        scheme: Optional[IntegrationScheme] = None) -> KLDecomposition:
    """Extended KL rebuilt from the masses and the KL of the normalized densities."""
    zp = _mass(p, scheme, "mass-p")
    zq = _mass(q, scheme, "mass-q")
    lzp, lzq = math.log(zp), math.log(zq)
    pn = DensityFn(lambda x: p.log_eval(x) - lzp, p.support, True, p.precision)
    qn = DensityFn(lambda x: q.log_eval(x) - lzq, q.support, True, q.precision)
    kl = kl_extended(pn, qn, scheme)
    total = zp * (kl + math.log(zp / zq)) + zq - zp
    return KLDecomposition(zp, zq, kl, total)
