import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from expfamdiv import IntegrationError, make_family, pack_sym
from expfamdiv import divergences as dv
from expfamdiv import oracle as orc
from expfamdiv.families import Support

from conftest import load_schema, spd

EXPO = make_family("Exponential")
CN = make_family("CenteredNormal1D")


def dens(model, theta, normalized=True):
    return orc.density_fn(model, theta, normalized)


# -- integrate ---------------------------------------------------------------------------


def test_integrate_examples():
    v, err = orc.integrate(lambda x: np.exp(-2.0 * x), Support("halfline"))
    assert abs(v - 0.5) <= 1e-12 and err <= max(1e-10, 1e-8 * v)
    v, _ = orc.integrate(lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), Support("real"))
    assert abs(v - 1.0) <= 1e-12
    v, _ = orc.integrate(lambda k: np.exp(-1.0 - gammaln(k + 1.0)), Support("naturals"))
    assert abs(v - 1.0) <= 1e-14


def test_integrate_log_mode_binary():
    v, err = orc.integrate(lambda k: np.log(0.25 + 0.5 * k), Support("binary"), log=True)
    assert v == 1.0 and err == 0.0


def test_integrate_reports_non_convergence():
    scheme = orc.IntegrationScheme(max_evals=30)
    with pytest.raises(IntegrationError):
        orc.integrate(lambda x: np.sin(50.0 * x) ** 2 * np.exp(-0.01 * x), Support("halfline"), scheme)


def test_series_with_slow_tail():
    # Poisson(10) mass: large terms before the geometric tail kicks in
    f = lambda k: np.exp(k * math.log(10.0) - 10.0)  # noqa: E731
    v, _ = orc.integrate(f, make_family("Poisson").support)
    assert abs(v - 1.0) <= 1e-13


def test_tensor_quadrature_normal_mass():
    model = make_family("CenteredNormalND", 3)
    theta = pack_sym(spd(np.random.default_rng(7), 3))
    p = dens(model, theta)
    v, _ = orc.integrate(p.log_eval, model.support, log=True, proposal_precision=p.precision)
    assert abs(v - 1.0) <= 1e-9


def test_monte_carlo_is_seeded():
    model = make_family("CenteredNormalND", 5)
    rng = np.random.default_rng(11)
    p = dens(model, pack_sym(spd(rng, 5)), False)
    q = dens(model, pack_sym(spd(rng, 5)), False)
    s = orc.IntegrationScheme("monte-carlo", max_evals=20_000, seed=42)
    a = orc.alpha_div(p, q, 0.3, s)
    b = orc.alpha_div(p, q, 0.3, s)
    c = orc.alpha_div(p, q, 0.3, orc.IntegrationScheme("monte-carlo", max_evals=20_000, seed=43))
    assert a == b
    assert a != c


def test_scheme_json():
    s = orc.IntegrationScheme("tensor-quadrature", seed=5)
    doc = json.loads(s.to_json())
    jsonschema.validate(doc, load_schema("scheme"))
    assert orc.IntegrationScheme.from_json(doc) == s
    with pytest.raises(ValueError):
        orc.IntegrationScheme("simpson")
    with pytest.raises(ValueError):
        orc.IntegrationScheme(abs_tol=0.0)


def test_default_scheme_choice():
    assert orc.default_scheme(make_family("Poisson").support).kind == "series-sum"
    assert orc.default_scheme(EXPO.support).kind == "adaptive-quadrature"
    assert orc.default_scheme(make_family("CenteredNormalND", 3).support).kind == "tensor-quadrature"
    assert orc.default_scheme(make_family("CenteredNormalND", 4).support, 9).seed == 9


# -- density-side divergences, frozen values ------------------------------------------------


def test_bhattacharyya_examples():
    p, q = dens(EXPO, 1.0), dens(EXPO, 2.0)
    assert abs(orc.bhattacharyya_coeff(p, p, 0.3) - 1.0) <= 1e-10
    assert abs(orc.bhattacharyya_coeff(p, q, 0.5) - math.sqrt(2.0) / 1.5) <= 1e-10
    assert abs(orc.bhattacharyya_coeff(dens(CN, 2.0), dens(CN, 2.0), 0.7) - 1.0) <= 1e-10
    assert abs(orc.bhattacharyya_scaled(p, q, 0.5) - 4.0 * math.log(1.5 / math.sqrt(2.0))) <= 1e-9
    assert abs(orc.bhattacharyya_scaled(p, q, 1.0) - (1.0 - math.log(2.0))) <= 1e-9
    assert abs(orc.bhattacharyya_scaled(p, p, 0.4)) <= 1e-10


def test_renyi():
    p, q = dens(EXPO, 1.0), dens(EXPO, 2.0)
    rho = math.sqrt(2.0) / 1.5
    assert abs(orc.renyi_div(p, q, 0.5) + 2.0 * math.log(rho)) <= 1e-9
    # Renyi = alpha * scaled Bhattacharyya
    assert abs(orc.renyi_div(p, q, 0.5) - 0.5 * orc.bhattacharyya_scaled(p, q, 0.5)) <= 1e-9
    assert abs(orc.renyi_div(p, q, 0.999) - orc.kl_extended(p, q)) <= 1e-3
    with pytest.raises(ValueError):
        orc.renyi_div(p, q, 1.0)


def test_extended_kl_examples():
    pu, qu = dens(EXPO, 1.0, False), dens(EXPO, 2.0, False)
    assert abs(orc.kl_extended(pu, pu)) <= 1e-12
    assert abs(orc.kl_extended(pu, qu) - 0.5) <= 1e-9
    # sigma = 1, 2 -> sqrt(pi/2) (2 s2 - 3 s1 + s1^3 / s2^2)
    s1, s2 = 1.0, 2.0
    expected = math.sqrt(math.pi / 2) * (2 * s2 - 3 * s1 + s1 ** 3 / s2 ** 2)
    got = orc.kl_extended(dens(CN, 1 / s1 ** 2, False), dens(CN, 1 / s2 ** 2, False))
    assert abs(got - expected) <= 1e-6
    assert abs(got - 1.5666426716443749) <= 1e-9


def test_alpha_and_hellinger_examples():
    pu, qu = dens(EXPO, 1.0, False), dens(EXPO, 2.0, False)
    assert abs(orc.alpha_div(pu, pu, 0.5)) <= 1e-12
    assert abs(orc.alpha_div(pu, qu, 0.5) - 1.0 / 3.0) <= 1e-9
    assert abs(orc.hellinger_sq(pu, pu)) <= 1e-12
    assert abs(orc.hellinger_sq(pu, qu) - 1.0 / 12.0) <= 1e-10
    s1, s2 = 1.0, 2.0
    expected = (math.sqrt(math.pi / 2) * (s1 + s2)
                - 2 * math.sqrt(math.pi) * s1 * s2 / math.sqrt(s1 ** 2 + s2 ** 2))
    got = orc.hellinger_sq(dens(CN, 1.0, False), dens(CN, 0.25, False))
    assert abs(got - expected) <= 1e-6
    assert abs(got - 0.58928) <= 1e-5


def test_entropies():
    pu, qu = dens(EXPO, 1.0, False), dens(EXPO, 2.0, False)
    h = orc.entropy_extended(pu)
    assert abs(h - 1.0) <= 1e-9
    cross = orc.cross_entropy_extended(pu, qu)
    assert abs(cross - h - 0.5) <= 1e-9
    assert abs(orc.shannon_entropy(dens(CN, 1.0)) - 0.5 * math.log(2 * math.pi * math.e)) <= 1e-9


def test_kl_decomposition_examples():
    pu, qu = dens(EXPO, 1.0, False), dens(EXPO, 2.0, False)
    d = orc.klekl_decomposition(pu, qu)
    assert abs(d.Zp - 1.0) <= 1e-10 and abs(d.Zq - 0.5) <= 1e-10
    assert abs(d.total - 0.5) <= 1e-8
    same = orc.klekl_decomposition(pu, pu)
    assert abs(same.total) <= 1e-10 and abs(same.Zp - same.Zq) <= 1e-12
    n1 = make_family("Normal1D")
    t, t2 = np.array([1.0, 0.0]), np.array([2.0, 1.0])
    d = orc.klekl_decomposition(dens(n1, t, False), dens(n1, t2, False))
    assert abs(d.total - dv.bregman(n1.generator("Z"), t2, t)) <= 1e-6


def test_pair_checks_reject_mixed_supports():
    with pytest.raises(ValueError):
        orc.kl_extended(dens(EXPO, 1.0), dens(CN, 1.0))


# -- properties ---------------------------------------------------------------------------


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.05, 0.95))
def test_exponential_scaled_bhattacharyya_is_scaled_jensen(t1, t2, a):
    F = EXPO.generator("F")
    got = orc.bhattacharyya_scaled(dens(EXPO, t1), dens(EXPO, t2), a)
    assert abs(got - dv.jensen_scaled(F, t1, t2, a)) <= 1e-6


@given(st.floats(-2.0, 1.5), st.floats(-2.0, 1.5), st.floats(0.05, 0.95))
def test_poisson_alpha_divergence_is_scaled_partition_jensen(t1, t2, a):
    model = make_family("Poisson")
    Z = model.generator("Z")
    got = orc.alpha_div(dens(model, t1, False), dens(model, t2, False), a)
    assert abs(got - dv.jensen_scaled(Z, t1, t2, a)) <= 1e-6 * max(1.0, abs(got))


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_extended_kl_nonnegative_and_pointwise(t1, t2):
    p, q = dens(CN, t1, False), dens(CN, t2, False)
    kl = orc.kl_extended(p, q)
    assert kl >= -1e-10
    assert abs(kl - orc.kl_pointwise_bregman(p, q)) <= 1e-8
