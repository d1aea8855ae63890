import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate
from scipy.special import eval_chebyt, eval_legendre

from cmclab import greens as G
from cmclab import symmetry as S
from cmclab.clifford import DomainError, minimal_angle

from conftest import default_group


def random_product_points(rng, p, q, count):
    x = rng.normal(size=(count, p + 1))
    y = rng.normal(size=(count, q + 1))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return np.concatenate([x, y], axis=1)


def far_sample(field, rng, count=60, min_dist=0.5):
    pts = random_product_points(rng, field.p, field.q, 20 * count)
    keep = np.min(field.distances(pts), axis=1) > min_dist
    return pts[keep][:count]


def test_sphere_volume_examples():
    assert_allclose(G.sphere_volume(1), 2 * math.pi)
    assert_allclose(G.sphere_volume(2), 4 * math.pi)
    assert_allclose(G.sphere_volume(3), 2 * math.pi**2)
    with pytest.raises(DomainError):
        G.sphere_volume(0)


def test_kernel_block_is_zero(field12):
    assert field12.coefficients[1, 1] == 0.0
    assert np.all(np.isfinite(field12.coefficients))


def test_coefficients_are_inverse_eigenvalues(field12):
    ts = minimal_angle(1, 2)
    vol = math.cos(ts) * math.sin(ts) ** 2
    lam00 = 6.0
    assert_allclose(field12.coefficients[0, 0], -G.sphere_volume(2) / (vol * lam00), rtol=1e-14)


def test_constant_mode_pairs_to_total_volume(field12):
    # <Gamma, 1> over C_{t_*} equals -c_n m / lam_00
    ts = minimal_angle(1, 2)
    vol = math.cos(ts) * math.sin(ts) ** 2
    total = field12.coefficients[0, 0] * vol
    assert_allclose(total, -field12.c_n / 6.0, rtol=1e-14)


def test_solvability_error_for_single_source():
    single = S.GluingSet(1, 2, S.base_point(1, 2)[None])
    with pytest.raises(G.SolvabilityError, match="x_1 y_1"):
        G.solve_greens(1, 2, single, 40, 40)


def test_antipodal_pair_is_not_solvable():
    mu = S.base_point(1, 2)
    with pytest.raises(G.SolvabilityError):
        G.solve_greens(1, 2, S.GluingSet(1, 2, np.stack([mu, -mu])), 40, 40)


def test_rejects_small_caps(field12):
    with pytest.raises(DomainError):
        G.solve_greens(1, 2, field12.gluing, 6, 40)
    with pytest.raises(DomainError):
        G.solve_greens(1, 2, field12.gluing, 40, 40, mode="exact")


def test_g_invariance(field12, group12, rng):
    pts = random_product_points(rng, 1, 2, 100)
    base = G.evaluate(field12, pts)
    for g in group12.elements:
        assert_allclose(G.evaluate(field12, g.apply(pts)), base, atol=1e-8)


def test_raw_mode_invariance(field12, group12, rng):
    raw = field12.with_mode("raw")
    pts = far_sample(raw, rng)
    for g in group12.elements:
        assert_allclose(G.evaluate(raw, g.apply(pts)), G.evaluate(raw, pts), atol=1e-8)


def test_raw_and_subtracted_agree_far_from_sources(group12, rng):
    gl = S.orbit(group12)
    sub = G.solve_greens(1, 2, gl, 40, 40)
    raw = G.solve_greens(1, 2, gl, 120, 120, mode="raw")
    pts = far_sample(sub, rng, min_dist=0.9)
    assert_allclose(G.evaluate(sub, pts), G.evaluate(raw, pts), atol=5e-3)


def test_raw_warns_inside_exclusion_radius(field12):
    raw = field12.with_mode("raw")
    z = G.source_chart_points(raw, 0, np.array([[0.01, 0.0, 0.0]]))
    with pytest.warns(G.AccuracyWarning):
        _, mask = G.evaluate(raw, z, return_mask=True)
    assert mask.all()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        G.evaluate(field12, z)


def test_truncation_differences_decrease(group12, rng, field12):
    gl = S.orbit(group12)
    sample = far_sample(field12, rng, 40, min_dist=0.6)
    diffs = G.truncation_differences(1, 2, gl, [10, 20, 40], sample, mode="subtracted")
    assert diffs[1] < diffs[0]
    raw = G.truncation_differences(1, 2, gl, [20, 30, 40], sample, mode="raw")
    assert raw[1] < raw[0]


def test_local_expansion_n3(field12):
    fit = G.local_expansion(field12)
    assert_allclose(fit.exponent, -1.0, rtol=0.15)
    assert_allclose(fit.coefficient, 1.0, rtol=0.15)
    assert_allclose(fit.gamma_lambda, field12.gamma_lambda, atol=0.02)


def test_local_expansion_raw_high_cap(group12):
    raw = G.solve_greens(1, 2, S.orbit(group12), 160, 160, mode="raw")
    fit = G.local_expansion(raw, radii=np.geomspace(0.15, 0.0375, 6))
    assert_allclose(fit.exponent, -1.0, rtol=0.15)
    assert_allclose(fit.coefficient, 1.0, rtol=0.15)


def test_local_expansion_other_source_and_direction(field12):
    fit = G.local_expansion(field12, mu=1, direction=[1.0, 0.0, 0.0])
    assert_allclose(fit.exponent, -1.0, rtol=0.15)


def test_local_expansion_preconditions(field12):
    with pytest.raises(DomainError):
        G.local_expansion(field12, radii=[0.1, 0.05, 0.02])
    with pytest.raises(DomainError):
        G.local_expansion(field12, radii=[0.01, 0.02, 0.03, 0.04])


def test_local_expansion_fit_error(field12):
    with pytest.raises(G.ExpansionFitError):
        G.local_expansion(field12, radii=np.geomspace(1.2, 0.3, 5), max_residual=1e-6)


@pytest.mark.parametrize("p,q", [(2, 2), (1, 3)])
def test_gamma_lambda_zero_for_n4(p, q):
    fld = G.solve_greens(p, q, S.orbit(default_group(p, q)), 24, 24)
    assert fld.gamma_lambda == 0.0
    fit = G.local_expansion(fld)
    assert fit.gamma_lambda == 0.0
    assert_allclose(fit.exponent, -2.0, rtol=0.15)


def test_gamma_lambda_requires_subtracted(field12):
    with pytest.raises(DomainError):
        _ = field12.with_mode("raw").gamma_lambda


def test_pairing_identity(field12):
    lhs, rhs, rel = G.pairing_identity(field12, resolution=64)
    assert rel < 0.02
    assert rhs < 0


def test_pairing_identity_raw_is_exact(field12):
    _, _, rel = G.pairing_identity(field12.with_mode("raw"), resolution=64)
    assert rel < 1e-10


@pytest.mark.parametrize("p,q", [(2, 2), (1, 3)])
def test_pairing_identity_n4(p, q):
    fld = G.solve_greens(p, q, S.orbit(default_group(p, q)), 24, 24)
    _, _, rel = G.pairing_identity(fld, resolution=32)
    assert rel < 0.02


def test_parametrix_zonal_coefficients_against_quadrature(field12):
    # b_ij = int chi S T_i(cos th) P_j(cos ph) over the unit S^1 x S^2 for sources at the poles
    par = field12.parametrix
    ts = minimal_angle(1, 2)
    c, s = math.cos(ts), math.sin(ts)
    b = par.zonal_coefficients(6, 6)

    def f(ph, th, i, j):
        val = par.cut_profile(np.array([(c * th) ** 2]), np.array([(s * ph) ** 2]))[0][0]
        return val * eval_chebyt(i, math.cos(th)) * eval_legendre(j, math.cos(ph)) * 2 * math.pi * math.sin(ph)

    th_max = par.r_outer / c
    ph_max = par.r_outer / s
    for i, j in [(0, 0), (1, 0), (0, 1), (2, 3)]:
        val, _ = integrate.dblquad(f, -th_max, th_max, 0, ph_max, args=(i, j), epsabs=1e-10, epsrel=1e-8)
        assert_allclose(b[i, j], val, rtol=2e-4, atol=1e-8)


def test_parametrix_profile_derivatives():
    par = G.Parametrix(1, 2, 0.1, 0.8)
    P, Q, h = np.array([0.03]), np.array([0.02]), 1e-6
    vals = par.profile(P, Q)
    assert_allclose(vals[1], (par.profile(P + h, Q)[0] - par.profile(P - h, Q)[0]) / (2 * h), rtol=1e-6)
    assert_allclose(vals[2], (par.profile(P, Q + h)[0] - par.profile(P, Q - h)[0]) / (2 * h), rtol=1e-6)
    assert_allclose(vals[4], (par.profile(P, Q + h)[1] - par.profile(P, Q - h)[1]) / (2 * h), rtol=1e-5)


def test_evaluate_jets_match_finite_differences(field12, rng):
    from cmclab._geometry import sphere_exp, tangent_frames, unit_blocks

    z = far_sample(field12, rng, 3, min_dist=0.2)
    val, grad, hess = G.evaluate_jets(field12, z)
    x, y = unit_blocks(z, 1)
    Fx, Fy = tangent_frames(x), tangent_frames(y)
    h = 1e-4
    for k in range(len(z)):
        def f(w):
            xx = sphere_exp(x[k], Fx[k], w[:1])
            yy = sphere_exp(y[k], Fy[k], w[1:])
            return float(G.evaluate(field12, np.concatenate([xx, yy])))
        e = np.eye(3)
        g_fd = np.array([(f(h * e[a]) - f(-h * e[a])) / (2 * h) for a in range(3)])
        assert_allclose(grad[k], g_fd, atol=1e-6)
        H_fd = np.array([[(f(h * (e[a] + e[b])) - f(h * (e[a] - e[b])) - f(h * (e[b] - e[a]))
                           + f(-h * (e[a] + e[b]))) / (4 * h * h) for b in range(3)] for a in range(3)])
        assert_allclose(hess[k], H_fd, atol=1e-4)
        assert_allclose(val[k], f(np.zeros(3)), atol=1e-12)


def test_json_round_trip(field12, rng):
    data = G.to_json(field12)
    back = G.from_json(data)
    pts = far_sample(field12, rng, 10)
    assert_allclose(G.evaluate(back, pts), G.evaluate(field12, pts), atol=1e-14)
    with pytest.raises(DomainError):
        G.from_json(dict(data, version=99))
    with pytest.raises(DomainError):
        G.from_json(dict(data, format="other"))


def test_kernels_numba_and_numpy_agree():
    from cmclab import _kernels

    tau = np.linspace(-1, 1, 37)
    for d in (1, 2, 3):
        fast = _kernels.zonal_table(d, 12, tau)
        slow = _kernels._zonal_table_np(d, 12, tau, _kernels.zonal_norms(d, 12))
        for a, b in zip(fast, slow):
            assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    rng = np.random.default_rng(0)
    coef = rng.normal(size=(13, 13))
    pt = _kernels.zonal_table(1, 12, tau)
    qt = _kernels.zonal_table(2, 12, tau[::-1].copy())
    assert_allclose(_kernels.contract(coef, pt, qt), _kernels._contract_np(coef, *pt, *qt), atol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_zonal_reproducing_property(d):
    # int Z_k(x . a) Z_k(x . b) dx = Z_k(a . b)
    from cmclab import _kernels
    from cmclab._geometry import sphere_quadrature

    nodes, w = sphere_quadrature(d, 24, 48)
    a = np.zeros(d + 1)
    a[0] = 1
    b = np.zeros(d + 1)
    b[0], b[1] = math.cos(0.7), math.sin(0.7)
    za = _kernels.zonal_table(d, 5, nodes @ a)[0]
    zb = _kernels.zonal_table(d, 5, nodes @ b)[0]
    lhs = (w[:, None] * za * zb).sum(axis=0)
    rhs = _kernels.zonal_table(d, 5, np.array([a @ b]))[0][0]
    assert_allclose(lhs, rhs, atol=1e-12)
