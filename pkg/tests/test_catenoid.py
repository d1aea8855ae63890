import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import beta

from cmclab import catenoid as K
from cmclab.clifford import DomainError


def height_oracle(n):
    # int_R cosh(a s)^{-b} ds = B(b/2, 1/2)/a with a = n-1, b = (n-2)/(n-1)
    a, b = n - 1, (n - 2) / (n - 1)
    return beta(b / 2, 0.5) / a


def test_profile_examples():
    assert K.profile(3, 0.0) == (1.0, 0.0)
    ph, ps = K.profile(3, 1.0)
    assert_allclose(ph, math.sqrt(math.cosh(2.0)), rtol=1e-14)
    assert_allclose(ph, 1.9397, atol=1e-4)
    oracle = float(mpmath.quad(lambda s: mpmath.cosh(2 * s) ** -0.5, [0, 1]))
    assert_allclose(ps, oracle, rtol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_profile_parity_and_monotonicity(n):
    s = np.linspace(0.05, 3.0, 13)
    for x in s:
        a, b = K.profile(n, x)
        c, d = K.profile(n, -x)
        assert_allclose(a, c, atol=1e-12)
        assert_allclose(b, -d, atol=1e-12)
        assert a >= 1.0
    psi = K.CatenoidProfile(n).psi_array(np.linspace(-3, 3, 31))
    assert np.all(np.diff(psi) > 0)


def test_phi_large_argument_is_finite():
    assert np.isfinite(K.phi(3, 400.0))
    assert_allclose(np.log(K.phi(3, 400.0)), 400.0 - 0.5 * math.log(2), rtol=1e-12)


def test_phi_derivatives_match_finite_differences():
    s, h = 0.7, 1e-5
    f, d1, d2 = K.phi_derivatives(4, s)
    assert_allclose(d1, (K.phi(4, s + h) - K.phi(4, s - h)) / (2 * h), rtol=1e-8)
    assert_allclose(d2, (K.phi(4, s + h) - 2 * f + K.phi(4, s - h)) / h**2, rtol=1e-5)


def test_neck_height_integral_n3():
    val = K.neck_height_integral(3)
    assert_allclose(val, height_oracle(3), rtol=1e-12)
    assert_allclose(val, 2.62, atol=5e-3)


@pytest.mark.parametrize("n", [4, 5, 6, 8])
def test_neck_height_integral_oracle(n):
    assert_allclose(K.neck_height_integral(n), height_oracle(n), rtol=1e-12)


def test_neck_height_integral_decreasing():
    vals = [K.neck_height_integral(n) for n in range(3, 9)]
    assert all(v > 0 for v in vals)
    assert np.all(np.diff(vals) < 0)


def test_neck_height_rejects_small_n():
    with pytest.raises(DomainError):
        K.neck_height_integral(2)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_psi_tends_to_half_height(n):
    prof = K.CatenoidProfile(n)
    big = 40.0 / (n - 2)
    assert_allclose(2 * prof.psi(big), K.neck_height_integral(n), atol=1e-11)
    assert_allclose(prof.psi_limit(), 0.5 * K.neck_height_integral(n), atol=1e-14)


def test_tail_bound_dominates():
    for n in (3, 4, 5):
        for s in (1.0, 3.0):
            tail = K.neck_height_integral(n) / 2 - K.CatenoidProfile(n).psi(s)
            assert 0 < tail <= K.tail_bound(n, s)


def test_mean_curvature_residual_examples():
    assert K.catenoid_mean_curvature_residual(3, 0.0, 1e-4) <= 1e-6
    assert K.catenoid_mean_curvature_residual(4, 2.0, 1e-4) <= 1e-5
    with pytest.raises(DomainError):
        K.catenoid_mean_curvature_residual(3, 0.0, 0.0)


def test_mean_curvature_residual_second_order():
    a = K.catenoid_mean_curvature_residual(3, 0.8, 1e-2)
    b = K.catenoid_mean_curvature_residual(3, 0.8, 5e-3)
    assert 3.5 < a / b < 4.5


def test_surface_of_revolution_formula_sphere():
    # unit sphere (sin u Theta, cos u), outward normal: |H| = n
    n, u = 3, 0.9
    val = K.surface_of_revolution_mean_curvature(n, math.sin(u), math.cos(u), -math.sin(u),
                                                 -math.sin(u), -math.cos(u))
    assert_allclose(abs(val), n, rtol=1e-12)


@pytest.mark.parametrize("n,name,rng", [
    (3, "translation_vertical", (-3, 3)),
    (5, "dilation", (-2, 2)),
    (4, "translation_horizontal", (-3, 3)),
])
def test_jacobi_residual_examples(n, name, rng):
    assert K.jacobi_residual(n, name, rng, 1e-3) <= 1e-4


def test_jacobi_residual_unknown_field():
    with pytest.raises(K.UsageError):
        K.jacobi_residual(3, "rotation")


def test_jacobi_residual_detects_non_solution():
    s = np.linspace(-2, 2, 41)
    res = K.mode_operator(3, 0, lambda x: np.cosh(x), s, 1e-3)
    assert np.max(np.abs(res)) > 0.1


@pytest.mark.parametrize("n", [3, 4, 5])
def test_mode_zero_wronskian_constant(n):
    w = K.weighted_wronskian(n, np.linspace(-4, 4, 81))
    assert np.ptp(w) < 1e-6
    assert_allclose(w, n - 1, atol=1e-6)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_mode_zero_fields_do_not_both_decay(n):
    ends = np.array([-12.0, 12.0])
    f1 = K.jacobi_field(n, "translation_vertical", ends)[0]
    f2 = K.jacobi_field(n, "dilation", ends)[0]
    assert_allclose(f1, [-1.0, 1.0], atol=1e-10)
    half = 0.5 * K.neck_height_integral(n)
    assert_allclose(f2, [half, half], atol=1e-4)
    # a combination decaying at both ends would make the matrix of limits singular
    assert abs(np.linalg.det(np.stack([f1, f2]))) > 0.5


@pytest.mark.parametrize("n,j", [(3, 2), (5, 2), (3, 3), (4, 2), (4, 3), (5, 3)])
def test_bounded_mode_verdict(n, j):
    v = K.bounded_mode_verdict(n, j, -0.5, 8.0)
    assert v.verdict == "no_bounded_nontrivial"
    # the candidate grows like rho^j = e^{j s} and decays like e^{(n-2+j) s} at -inf
    assert_allclose(v.growth_exponent, j, rtol=0.05)
    assert_allclose(v.decay_exponent, n - 2 + j, rtol=0.05)


def test_bounded_mode_preconditions():
    with pytest.raises(DomainError):
        K.bounded_mode_verdict(3, 1, -0.5)
    with pytest.raises(DomainError):
        K.bounded_mode_verdict(3, 2, 0.5)


def test_mode_exponents_are_indicial_roots():
    for n in (3, 4, 5):
        for j in (2, 3, 4):
            g, d = K.mode_exponents(n, j)
            for r in (g, d):
                assert r * r + (n - 2) * r - j * (n - 2 + j) == 0


@pytest.mark.parametrize("n,rho,eps", [(3, 1e-2, 1e-3), (4, 0.3, 0.01), (5, 0.05, 0.04)])
def test_s_of_radius_inverts_phi(n, rho, eps):
    s = K.s_of_radius(n, rho, eps)
    assert_allclose(eps * K.phi(n, s), rho, rtol=1e-13)


def test_s_of_radius_example():
    assert_allclose(K.s_of_radius(3, 1e-2, 1e-3), math.acosh(100) / 2, rtol=1e-13)
    assert_allclose(K.s_of_radius(3, 1e-2, 1e-3), 2.649, atol=1e-3)
    with pytest.raises(DomainError):
        K.s_of_radius(3, 1e-4, 1e-3)
