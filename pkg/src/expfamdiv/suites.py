"""Verification suites run by ``expfamdiv verify``.

Each check compares two independent computations (or tests an inequality)
over a fixed parameter grid and records the largest observed error.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional

import numpy as np

from . import divergences as dv
from . import oracle as orc
from .deformation import (DeformationSpec, convexity_certificate, deform, exponential_zp,
                          identity, log_mean, mn_convexity_check, power)
from .families import FamilyModel, Kind, make_family, pack_sym
from .generator import GeneratorFn
from .legendre import (canonical_divergence, conjugate_pair, double_conjugate_check,
                       negentropy_check)

__all__ = ["Check", "PARAM_PAIRS", "ALPHAS", "family_pairs", "run_suite", "SUITES", "ONE_D_KINDS"]

ALPHAS = tuple(round(0.1 * i, 1) for i in range(1, 10))

ONE_D_KINDS = (Kind.EXPONENTIAL, Kind.POISSON, Kind.BERNOULLI, Kind.CENTERED_NORMAL_1D, Kind.NORMAL_1D)

PARAM_PAIRS = {
    Kind.EXPONENTIAL: [(1.0, 2.0), (3.0, 0.5), (0.5, 0.7), (2.0, 5.0), (1.5, 1.0)],
    Kind.POISSON: [(0.0, 1.0), (-1.0, 0.5), (0.3, -0.2), (1.0, 1.5), (-2.0, -0.5)],
    Kind.BERNOULLI: [(0.0, 1.0), (-2.0, 2.0), (0.5, -0.5), (3.0, 1.0), (-1.0, -3.0)],
    Kind.CENTERED_NORMAL_1D: [(1.0, 4.0), (1.0, 0.25), (2.0, 1.0), (0.5, 3.0), (1.5, 1.2)],
    Kind.NORMAL_1D: [((1.0, 0.0), (2.0, 1.0)), ((1.0, 1.0), (0.5, -0.5)), ((2.0, -1.0), (1.0, 0.5)),
                     ((0.5, 0.2), (3.0, 1.0)), ((1.5, 0.3), (1.0, -0.2))],
}


def _nd_pairs(d: int):
    rng = np.random.default_rng(1234 + d)
    pairs = []
    for _ in range(3):
        mats = []
        for _ in range(2):
            a = rng.normal(scale=0.3, size=(d, d))
            mats.append(pack_sym(np.eye(d) * rng.uniform(0.6, 1.6) + 0.5 * (a @ a.T)))
        pairs.append(tuple(mats))
    return pairs


def family_pairs(model: FamilyModel):
    if model.kind is Kind.CENTERED_NORMAL_ND:
        return _nd_pairs(model.dim)
    return [(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
            for a, b in PARAM_PAIRS[model.kind]]


@dataclass
class Check:
    name: str
    family: str
    max_error: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)


class _Acc:
    """Running maximum of an error measure."""

    def __init__(self, name, family, tol, relative=False):
        self.name, self.family, self.tol, self.relative = name, family, tol, relative
        self.worst = 0.0
        self.failed = False
        self.detail = ""

    def add(self, got, want):
        err = abs(got - want)
        if self.relative:
            err /= max(abs(want), 1e-300)
        if not math.isfinite(err):
            err = math.inf
        if err > self.worst:
            self.worst = err
        if err > self.tol:
            self.failed = True

    def require(self, ok: bool, detail: str = ""):
        if not ok:
            self.failed = True
            self.detail = self.detail or detail

    def done(self) -> Check:
        return Check(self.name, self.family, self.worst, self.tol, not self.failed, self.detail)


def _mix(a, b, s):
    return s * a + (1.0 - s) * b


# -- suites ------------------------------------------------------------------


def convexity_suite(model: FamilyModel, seed: int) -> List[Check]:
    fam = model.kind.value
    F, Z = model.generator("F"), model.generator("Z")
    pairs = family_pairs(model)
    out = []

    chain = _Acc("log-convexity-chain", fam, 1e-12)
    for t0, t1 in pairs:
        z0, z1 = Z(t0), Z(t1)
        for a in ALPHAS:
            lhs = Z(_mix(t0, t1, a))
            # interpolation forms: both means reduce to z exactly when z0 == z1
            geo = z1 * math.exp(a * math.log(z0 / z1))
            arith = z1 + a * (z0 - z1)
            # AM-GM is an equality exactly when the two values coincide
            strict = lhs < geo and (geo < arith if z0 != z1 else geo == arith)
            chain.require(strict, f"chain fails at {t0.tolist()}, {t1.tolist()}, alpha={a}")
    out.append(chain.done())

    pos = _Acc("bregman-positivity", fam, 0.0)
    for t0, t1 in pairs:
        for g in (F, Z):
            pos.require(dv.bregman(g, t0, t1) > 0 and dv.bregman(g, t1, t0) > 0,
                        f"{g.name} Bregman not positive")
    out.append(pos.done())

    rt = _Acc("Z-exp-F-roundtrip", fam, 1e-12, relative=True)
    gr = _Acc("gradF-gradZ-over-Z", fam, 1e-10, relative=True)
    fd = _Acc("gradient-finite-difference", fam, 1e-6)
    ge = _Acc("Z-ge-F-plus-1", fam, 0.0)
    for t0, t1 in pairs:
        for t in (t0, t1):
            rt.add(math.exp(F(t)), Z(t))
            rt.add(math.log(Z(t)), F(t))
            for a, b in zip(F.grad(t), Z.grad(t) / Z(t)):
                gr.add(a, b)
            for g in (F, Z):
                h = 1e-5
                for i in range(t.size):
                    e = np.zeros_like(t)
                    e[i] = h
                    fdv = (g(t + e) - g(t - e)) / (2 * h)
                    fd.add(g.grad(t)[i], fdv)
            ge.require(Z(t) - 1.0 >= F(t) and Z(t) >= F(t), "Z - 1 >= F violated")
    out += [rt.done(), gr.done(), fd.done(), ge.done()]

    mid = _Acc("domain-convexity", fam, 0.0)
    for t0, t1 in pairs:
        for a in ALPHAS:
            mid.require(model.in_domain(_mix(t0, t1, a)), "mixture left the domain")
    out.append(mid.done())

    if model.kind is Kind.EXPONENTIAL:
        grid = [np.array([v]) for v in np.linspace(0.2, 5.0, 25)]
        sq = GeneratorFn(value=lambda t: float(t[0] ** 2), name="theta^2")
        lc = _Acc("theta-squared-log-concave", fam, 0.0)
        verdict = mn_convexity_check(sq, identity(), log_mean(), grid)
        lc.require(verdict.verdict == "not-convex", f"got {verdict.verdict}")
        lc.require(convexity_certificate(sq, grid).verdict == "convex", "theta^2 should be convex")
        out.append(lc.done())
    return out


def identities_suite(model: FamilyModel, seed: int) -> List[Check]:
    fam = model.kind.value
    F, Z = model.generator("F"), model.generator("Z")
    pairs = family_pairs(model)
    nd = model.kind is Kind.CENTERED_NORMAL_ND
    mc = nd and model.dim > 3
    scheme = orc.default_scheme(model.support, seed=seed)
    if mc:
        scheme = orc.IntegrationScheme("monte-carlo", seed=seed, max_evals=400_000)
        pairs = pairs[:1]
    alphas = (0.3, 0.5, 0.7) if nd else ALPHAS
    tol = 2e-2 if mc else 1e-6
    out = []

    bhat = _Acc("eq12-bhattacharyya-jensen", fam, tol, relative=mc)
    propz = _Acc("propZ-alpha-jensen", fam, tol, relative=mc)
    for t1, t2 in pairs:
        p, q = orc.density_fn(model, t1), orc.density_fn(model, t2)
        pu, qu = orc.density_fn(model, t1, False), orc.density_fn(model, t2, False)
        for a in alphas:
            bhat.add(orc.bhattacharyya_scaled(p, q, a, scheme), dv.jensen_scaled(F, t1, t2, a))
            propz.add(orc.alpha_div(pu, qu, a, scheme), dv.jensen_scaled(Z, t1, t2, a))
    out += [bhat.done(), propz.done()]
    if mc:
        return out

    kl = _Acc("ekluef-kl-bregman", fam, 1e-6)
    hel = _Acc("jzef-hellinger-jensen", fam, 1e-6)
    klekl = _Acc("klekl", fam, 1e-8)
    bz = _Acc("bz-decomposition", fam, 1e-10, relative=True)
    duo = _Acc("duo-bregman-mixed-kl", fam, 1e-6)
    ren = _Acc("renyi-scaled-bhattacharyya", fam, 1e-10, relative=True)
    ce = _Acc("cross-entropy-decomposition", fam, 1e-9)
    for t1, t2 in pairs:
        p = orc.density_fn(model, t1)
        pu, qu = orc.density_fn(model, t1, False), orc.density_fn(model, t2, False)
        q = orc.density_fn(model, t2)
        kl_o = orc.kl_extended(pu, qu, scheme)
        kl.add(kl_o, dv.bregman(Z, t2, t1))
        kl.add(orc.kl_extended(p, q, scheme), dv.bregman(F, t2, t1))
        hel.add(orc.hellinger_sq(pu, qu, scheme), dv.jensen(Z, t1, t2))
        dec = orc.klekl_decomposition(pu, qu, scheme)
        klekl.add(dec.total, kl_o)
        klekl.add(dec.Zp * dec.kl_normalized + dv.scalar_kl(dec.Zp, dec.Zq), kl_o)
        parts = dv.bz_decomposition(model, t1, t2)
        bz.add(parts.total, dv.bregman(Z, t2, t1))
        duo.add(orc.kl_extended(p, qu, scheme), dv.mixed_kl(model, t1, t2))
        for a in (0.25, 0.5, 0.75):
            rho = orc.bhattacharyya_coeff(p, q, a, scheme)
            ren.add(orc.renyi_div(p, q, a, scheme) / a, -math.log(rho) / (a * (1 - a)))
        ce.add(orc.cross_entropy_extended(pu, qu, scheme) - orc.entropy_extended(pu, scheme), kl_o)
    out += [kl.done(), hel.done(), klekl.done(), bz.done(), duo.done(), ren.done(), ce.done()]

    if not nd:
        # the gap to the Bregman branch is first order in eps; check it shrinks linearly
        lim = _Acc("limit-continuity-linear", fam, math.inf)
        for t1, t2 in pairs:
            for g in (F, Z):
                for rev in (False, True):
                    b = dv.bregman(g, t2, t1) if rev else dv.bregman(g, t1, t2)
                    errs = [abs(dv.jensen_scaled(g, t1, t2, 1 - e if rev else e) - b) for e in (1e-4, 1e-5)]
                    lim.add(errs[1], 0.0)
                    lim.require(errs[1] <= 0.11 * errs[0] + 1e-9, f"{g.name}: {errs}")
        out.append(lim.done())
    return out


def legendre_suite(model: FamilyModel, seed: int) -> List[Check]:
    fam = model.kind.value
    if model.kind is Kind.CENTERED_NORMAL_ND:
        return []
    F, Z = model.generator("F"), model.generator("Z")
    pairs = family_pairs(model)
    scheme = orc.default_scheme(model.support, seed=seed)
    out = []

    dc = _Acc("double-conjugate", fam, 1e-7)
    for t1, t2 in pairs[:3]:
        for g in (F, Z):
            dc.add(double_conjugate_check(g, 0.5 * (t1 + t2) + 0.01), 0.0)
    out.append(dc.done())

    four = _Acc("canonical-four-routes", fam, 1e-8)
    rev = _Acc("canonical-reverse-kl", fam, 1e-6)
    pair = conjugate_pair(F)
    for t1, t2 in pairs[:3]:
        routes = canonical_divergence(pair, t1, t2)
        four.add(routes.spread, 0.0)
        kl = orc.kl_extended(orc.density_fn(model, t2), orc.density_fn(model, t1), scheme)
        rev.add(routes.bregman, kl)
    out += [four.done(), rev.done()]

    ne = _Acc("negentropy", fam, 1e-6)
    for t1, _ in pairs[:3]:
        ne.add(negentropy_check(model, t1, scheme), 0.0)
    out.append(ne.done())
    return out


def deformation_suite(model: FamilyModel, seed: int) -> List[Check]:
    if model.kind is not Kind.EXPONENTIAL:
        return []
    fam = model.kind.value
    grid = [np.array([v]) for v in np.linspace(0.2, 5.0, 25)]
    out = []
    sweep = _Acc("power-mean-sweep", fam, 0.0)
    for p in (-0.9, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0):
        sweep.require(convexity_certificate(exponential_zp(p), grid).verdict == "convex", f"p={p}")
    for p in (-1.1, -1.5, -2.0):
        sweep.require(convexity_certificate(exponential_zp(p), grid).verdict == "not-convex", f"p={p}")
    out.append(sweep.done())

    Z = model.generator("Z")
    routes = _Acc("mn-convexity-routes", fam, 0.0)
    for rho, tau in ((identity(), log_mean()), (identity(), identity()), (log_mean(), log_mean()),
                     (identity(), power(0.5))):
        try:
            mn_convexity_check(Z, rho, tau, grid)
        except RuntimeError as exc:
            routes.require(False, str(exc))
    out.append(routes.done())

    grp = _Acc("deformation-group", fam, 1e-9)
    s1 = DeformationSpec(power(0.5), power(2.0))
    s2 = DeformationSpec(log_mean().inverse(), identity())
    twice = deform(deform(Z, s1), s2)
    once = deform(Z, DeformationSpec(s1.rho.compose(s2.rho), s1.tau.compose(s2.tau)))
    back = deform(deform(Z, s1), s1.inverse())
    for t in np.linspace(0.2, 1.5, 7):
        grp.add(twice(t), once(t))
    for t in np.linspace(0.5, 3.0, 6):
        grp.add(back(t), Z(t))
    out.append(grp.done())

    aff = _Acc("affine-power-bregman", fam, 1e-8)
    aff.add(dv.bregman(exponential_zp(1.0), 1.0, 2.0), dv.bregman(Z, 1.0, 2.0))
    out.append(aff.done())
    return out


SUITES = {
    "convexity": convexity_suite,
    "identities": identities_suite,
    "legendre": legendre_suite,
    "deformation": deformation_suite,
}


def default_families() -> List[FamilyModel]:
    return [make_family(k) for k in ONE_D_KINDS] + [make_family("CenteredNormalND", 2),
                                                     make_family("CenteredNormalND", 5)]


def run_suite(name: str, families: Optional[Iterable[FamilyModel]] = None, seed: int = 0) -> List[Check]:
    """Run one suite (or ``"all"``) over the given families."""
    names = list(SUITES) if name == "all" else [name]
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
    fams = list(families) if families is not None else default_families()
    checks: List[Check] = []
    for n in names:
        for model in fams:
            if n == "convexity" and model.kind is Kind.CENTERED_NORMAL_ND and model.dim > 3:
                continue
            checks.extend(SUITES[n](model, seed))
    return checks
