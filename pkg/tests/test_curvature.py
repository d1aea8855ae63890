import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cmclab import assembler as A
from cmclab import curvature as C
from cmclab import greens as G
from cmclab._geometry import tangent_frames, unit_blocks
from cmclab.clifford import DomainError, ModeIndex, mean_curvature_at, minimal_angle, mode_eigenvalue


@pytest.fixture(scope="module")
def params12(field12, t_star12):
    return A.solve_neck_scale(1, 2, t_star12 + 0.02, field12.gamma_lambda)


@pytest.fixture(scope="module")
def atlas12(group12, field12, t_star12):
    return A.build_atlas(1, 2, t_star12 + 0.02, group12, field12)


def _random_pair(rng, p, q):
    x, y = unit_blocks(rng.normal(size=(1, p + q + 2)), p)
    return np.concatenate([x, y], axis=1)[0]


def test_ambient_metric_examples():
    ts = minimal_angle(1, 2)
    assert_allclose(C.ambient_metric(1, 2, ts), (1.0, 1 / 3, 2 / 3), atol=1e-15)
    assert_allclose(C.ambient_metric(1, 2, math.pi / 4), (1.0, 0.5, 0.5), atol=1e-15)
    with pytest.raises(DomainError):
        C.ambient_metric(1, 2, 0.0)


def test_ambient_metric_matches_pullback():
    p, q, v = 1, 2, 0.8
    z = A.base_pair(p, q)
    errs = []
    for h in (1e-2, 5e-3):
        dz = np.zeros_like(z)
        dz[1] = h
        dx = (A.toroidal_embed(p, q, z + dz, v) - A.toroidal_embed(p, q, z - dz, v)) / (2 * h)
        dz = np.zeros_like(z)
        dz[3] = h
        dy = (A.toroidal_embed(p, q, z + dz, v) - A.toroidal_embed(p, q, z - dz, v)) / (2 * h)
        _, cx, sy = C.ambient_metric(p, q, v)
        errs.append(max(abs(dx @ dx - cx), abs(dy @ dy - sy)))
    assert errs[0] < 1e-4
    assert_allclose(errs[0] / errs[1], 4.0, rtol=0.1)


@pytest.mark.parametrize("p,q,t", [(1, 2, 0.7), (2, 2, 0.9), (1, 3, 1.1)])
def test_graph_formula_constant_height(p, q, t):
    n = p + q
    jet = C.GraphJet(np.zeros(n + 2), t, np.zeros(n), np.zeros((n, n)))
    assert C.graph_mean_curvature(p, q, jet) == pytest.approx(mean_curvature_at(p, q, t), abs=1e-14)


def test_graph_jet_rejects_asymmetric_hessian():
    ddu = np.zeros((3, 3))
    ddu[0, 1] = 1.0
    with pytest.raises(DomainError):
        C.GraphJet(np.zeros(5), 0.8, np.zeros(3), ddu)


def test_graph_formula_degenerate_height():
    with pytest.raises(C.GeometryError):
        C.graph_mean_curvature_batch(1, 2, [1.7], np.zeros((1, 3)), np.zeros((1, 3, 3)))


def test_parametric_slice_converges_quadratically(rng):
    p, q, t = 1, 2, 0.8
    z0 = _random_pair(rng, p, q)
    emb = C.slice_chart(p, q, t, z0)
    w = np.zeros((1, p + q))
    ref = C.down_direction(emb(w), p)
    errs = [abs(C.parametric_mean_curvature(emb, w, h, ref)[0] - mean_curvature_at(p, q, t))
            for h in (1e-2, 5e-3)]
    assert errs[1] < 1e-5
    assert_allclose(errs[0] / errs[1], 4.0, rtol=0.1)


def test_parametric_orientation_flips_sign(rng):
    p, q, t = 1, 2, 0.8
    emb = C.slice_chart(p, q, t, _random_pair(rng, p, q))
    w = np.zeros((1, 3))
    ref = C.down_direction(emb(w), p)
    up = C.parametric_mean_curvature(emb, w, 1e-3, -ref)[0]
    assert_allclose(up, -mean_curvature_at(p, q, t), rtol=1e-5)


def test_parametric_singular_chart():
    def emb(w):
        # collapses the chart onto a curve
        a = w[:, 0]
        return np.stack([np.cos(a), np.sin(a), 0 * a, 0 * a, 0 * a], axis=1)

    with pytest.raises(C.GeometryError):
        C.parametric_mean_curvature(emb, np.zeros((1, 3)), 1e-3)


def test_chart_consistency_on_cap_points(atlas12, field12, params12):
    prm = params12
    idx = np.flatnonzero(atlas12.region == A.CAP_PLUS)[:: max(1, int(np.sum(atlas12.region == A.CAP_PLUS)) // 50)][:50]
    pts = atlas12.z[idx]
    u, du, ddu = A.height_jets(prm, field12, pts, A.CAP_PLUS, "upper", None)
    exact = C.graph_mean_curvature_batch(1, 2, u, du, ddu)

    def height(z):
        return A.graph_height(prm, G.evaluate(field12, z), "upper")

    errs = {}
    for h in (2e-3, 1e-3):
        vals = np.empty(len(idx))
        for k, z0 in enumerate(pts):
            emb = C.graph_chart(1, 2, height, z0)
            w = np.zeros((1, 3))
            vals[k] = C.parametric_mean_curvature(emb, w, h, C.down_direction(emb(w), 1))[0]
        errs[h] = np.max(np.abs(vals - exact))
    assert errs[1e-3] < 1e-4
    assert errs[1e-3] < 0.5 * errs[2e-3]


@pytest.mark.parametrize("p,q,t,i,j", [(1, 2, None, 1, 1), (1, 2, None, 0, 0), (1, 1, math.pi / 4, 2, 0),
                                       (2, 2, 0.9, 2, 1)])
def test_linearization_matches_eigenvalue(p, q, t, i, j):
    t = minimal_angle(p, q) if t is None else t
    err, deriv, pred = C.linearization_check(p, q, t, ModeIndex(i, j))
    lam = mode_eigenvalue(p, q, t, i, j)
    if lam == 0.0:
        assert np.max(np.abs(deriv)) < 1e-6
    else:
        assert err < 0.01
        sel = np.abs(pred) > 0.1 * np.max(np.abs(pred))
        assert_allclose(deriv[sel] / (pred[sel] / lam), lam, rtol=0.01)


def test_linearization_constant_mode_ratio():
    _, deriv, pred = C.linearization_check(1, 2, minimal_angle(1, 2), ModeIndex(0, 0))
    assert_allclose(deriv, 6.0, rtol=1e-6)


def test_linearization_parametric_path():
    t = minimal_angle(1, 2) + 0.1
    err, _, _ = C.linearization_check(1, 2, t, ModeIndex(2, 0), fd_step=1e-3, samples=8)
    assert err < 0.01


def test_flat_neck_is_minimal(params12, field12):
    s = np.linspace(-params12.s_max, params12.s_max, 9)
    theta = np.tile([0.6, 0.0, 0.8], (9, 1))
    H = C.neck_mean_curvature(params12, field12, 0, s, theta, flat=True)
    assert np.max(np.abs(H)) < 1e-6


def test_neck_center_curvature_bounded(params12, field12):
    H = C.neck_mean_curvature(params12, field12, 0, np.zeros(1), np.array([[0.0, 1.0, 0.0]]))
    Ht = mean_curvature_at(1, 2, params12.t)
    # O(eps) + O(1) cosh^{-n}(0)
    assert abs(H[0] - Ht) < 5.0


def test_neck_metric_expansion_constant_stable(field12, t_star12):
    consts = []
    for dd in (0.04, 0.02, 0.01, 0.005):
        prm = A.solve_neck_scale(1, 2, t_star12 + dd, field12.gamma_lambda)
        s = np.linspace(-prm.s_max, prm.s_max, 9)
        md = C.neck_metric_defect(prm, field12, s, np.tile([0.6, 0.0, 0.8], (9, 1)))
        e = prm.eps
        consts.append(np.max(md / (e**3 * np.cosh(s) ** 2 + e**4 * np.cosh(s) ** 4)))
    assert max(consts) / min(consts) < 3.0


def test_verify_gamma_domain(atlas12, field12):
    for g in (0.0, -1.0, 0.2):
        with pytest.raises(DomainError):
            C.verify_cmc_error(atlas12, field12, g)


def test_verify_report_structure(atlas12, field12):
    rep = C.verify_cmc_error(atlas12, field12, -0.5)
    assert rep.global_weighted == max(rep.region_weighted_max.values())
    assert set(rep.region_weighted_max) == {"CapPlus", "CapMinus", "Neck", "Transition"}
    assert_allclose(rep.scaled_global, rep.global_weighted / rep.eps**2.5, rtol=1e-12)
    assert_allclose(rep.H_t, mean_curvature_at(1, 2, atlas12.params.t), rtol=1e-14)
    d = rep.to_dict()
    assert "per_point" not in d and d["gamma"] == -0.5
    # caps close to the slice value, necks carry the largest raw error
    assert rep.region_raw_max["CapPlus"] < rep.region_raw_max["Neck"]


def test_report_csv(atlas12, field12):
    rep = C.verify_cmc_error(atlas12, field12, -0.5)
    lines = C.report_csv(atlas12, rep).splitlines()
    assert lines[0] == "region,mu,side,zeta,H,H_t,weighted_error"
    assert len(lines) == len(atlas12) + 1
    row = lines[1].split(",")
    assert row[0] in A.REGION_NAMES.values()
    assert_allclose(float(row[5]), rep.H_t, rtol=1e-9)


def test_global_weighted_error_monotone(group12, field12, t_star12):
    res = {"cap_x": 10, "cap_polar": 5, "cap_rings": 4, "directions": 4, "neck_s": 9, "transition_rho": 4}
    vals = []
    for dd in (0.04, 0.02, 0.01):
        atlas = A.build_atlas(1, 2, t_star12 + dd, group12, field12, res)
        vals.append(C.verify_cmc_error(atlas, field12, -0.5).global_weighted)
    for a, b in zip(vals, vals[1:]):
        assert b <= 1.2 * a


def test_mode_function_restricts_to_sphere(rng):
    # the (1,1) mode is x_0 y_0; its tangential gradient is the projection of the ambient one
    p, q = 1, 2
    z = rng.normal(size=(6, 5))
    x, y = unit_blocks(z, p)
    fr = (tangent_frames(x), tangent_frames(y))
    val, grad, hess = C.mode_function(p, q, ModeIndex(1, 1))(np.concatenate([x, y], axis=1), fr)
    assert_allclose(val, x[:, 0] * y[:, 0], atol=1e-15)
    assert_allclose(grad[:, :p], fr[0][:, :, 0] * y[:, :1], atol=1e-15)
    assert_allclose(hess, np.transpose(hess, (0, 2, 1)), atol=1e-15)
