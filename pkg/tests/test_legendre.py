import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expfamdiv import (ConvergenceError, affine_reparam_check, canonical_divergence, conjugate,
                       conjugate_generator, conjugate_pair, double_conjugate_check, legendre_boundary_diagnostic,
                       make_family, negentropy_check, solve_dual)
from expfamdiv import oracle as orc

EXPO = make_family("Exponential")
POIS = make_family("Poisson")
F = EXPO.generator("F")


def test_conjugate_examples():
    assert np.allclose(solve_dual(F, [-0.5]), [2.0], rtol=1e-10)
    assert abs(conjugate(F, [-0.5]) - (-1.0 - math.log(0.5))) <= 1e-10
    assert abs(conjugate(POIS.generator("F"), [1.0]) + 1.0) <= 1e-10


@given(st.floats(-20.0, -0.05))
def test_exponential_conjugate_closed_form(eta):
    assert abs(conjugate(F, [eta]) - (-1.0 - math.log(-eta))) <= 1e-8


@given(st.floats(0.05, 30.0))
def test_poisson_conjugate_closed_form(eta):
    expected = eta * math.log(eta) - eta
    assert abs(conjugate(POIS.generator("F"), [eta]) - expected) <= 1e-8 * max(1.0, abs(expected))


def test_solve_dual_rejects_points_outside_gradient_image():
    with pytest.raises(ConvergenceError) as info:
        solve_dual(F, [0.5])
    assert info.value.last_iterate is None


@pytest.mark.parametrize("kind,which,theta", [
    ("Exponential", "F", 2.0), ("Poisson", "F", 0.5), ("Exponential", "Z", 2.0),
    ("Bernoulli", "F", -1.0), ("CenteredNormal1D", "Z", 0.7),
])
def test_double_conjugation(kind, which, theta):
    gen = make_family(kind).generator(which)
    assert double_conjugate_check(gen, theta) <= 1e-7


def test_double_conjugation_two_dimensional():
    gen = make_family("Normal1D").generator("F")
    assert double_conjugate_check(gen, [1.5, -0.4]) <= 1e-7


def test_canonical_divergence_routes():
    pair = conjugate_pair(F)
    div = canonical_divergence(pair, 1.0, 2.0)
    for route in div:
        assert abs(route - (math.log(2.0) - 0.5)) <= 1e-9
    same = canonical_divergence(pair, 1.3, 1.3)
    assert max(abs(v) for v in same) <= 1e-9


def test_canonical_divergence_is_reverse_kl():
    model = make_family("Normal1D")
    pair = conjugate_pair(model.generator("F"))
    tp, tq = [1.0, 0.3], [2.0, -0.5]
    div = canonical_divergence(pair, tp, tq)
    assert div.spread <= 1e-8
    kl = orc.kl_extended(orc.density_fn(model, tq), orc.density_fn(model, tp))
    assert abs(div.value - kl) <= 1e-6


def test_conjugate_pair_maps_roundtrip():
    pair = conjugate_pair(POIS.generator("F"))
    theta = np.array([0.7])
    assert np.allclose(pair.to_primal(pair.to_dual(theta)), theta, atol=1e-10)
    assert pair.dual_domain([1.0]) and not pair.dual_domain([-1.0])


@pytest.mark.parametrize("kind,theta", [
    ("Exponential", 1.0), ("Poisson", 0.0), ("CenteredNormal1D", 1.0), ("Bernoulli", 0.8),
])
def test_negentropy(kind, theta):
    assert negentropy_check(make_family(kind), theta) <= 1e-6


@pytest.mark.parametrize("A,b,c,d", [
    (1.0, 0.0, 0.0, 0.0), (2.0, 0.1, 0.0, 3.0), (1.0, 0.0, 5.0, 0.0), (0.5, 0.2, -1.0, 2.0),
])
def test_affine_reparameterization(A, b, c, d):
    assert affine_reparam_check(F, A, b, c, d, 1.0, 2.0) <= 1e-9


def test_affine_reparameterization_matrix():
    gen = make_family("Normal1D").generator("Z")
    A = np.array([[1.0, 0.2], [0.0, 0.5]])
    err = affine_reparam_check(gen, A, [0.1, 0.0], [1.0, -2.0], 0.5, [1.0, 0.2], [2.0, -0.3])
    assert err <= 1e-9
    with pytest.raises(ValueError):
        affine_reparam_check(gen, np.zeros((2, 2)), 0.0, 0.0, 0.0, [1.0, 0.2], [2.0, -0.3])


def test_boundary_diagnostic():
    monotone, derivs = legendre_boundary_diagnostic(F, [1.0], [0.0])
    assert monotone
    assert derivs[-1] < -1e5
    # Z of the exponential family is also of Legendre type at 0
    assert legendre_boundary_diagnostic(EXPO.generator("Z"), [1.0], [0.0])[0]


def test_conjugate_generator_gradient_inverts():
    star = conjugate_generator(F)
    eta = np.array([-0.25])
    assert np.allclose(F.grad(star.grad(eta)), eta, atol=1e-10)
