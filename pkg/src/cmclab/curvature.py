"""Mean curvature of the approximate solution and the weighted error check.

Sign convention: a slice ``v = t`` has mean curvature ``q cot t - p tan t``
with respect to the normal ``-d/dv``.  On the assembled surface the normal
points into the region between the two sheets, so upper-sheet points use
``-d/dv``, lower-sheet points use ``+d/dv`` and neck points use the normal
pointing away from the neck axis; with these choices every slice-like piece
has curvature close to ``H_t``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import assembler as asm
from . import catenoid
from ._geometry import sphere_exp, tangent_frames, unit_blocks
from .clifford import DomainError, ModeIndex, mean_curvature_at, mode_eigenvalue
from .greens import GreensField


class GeometryError(ArithmeticError):
    """Degenerate metric or normal in a curvature computation."""


def ambient_metric(p: int, q: int, v: float) -> tuple[float, float, float]:
    """Block coefficients ``(1, cos^2 v, sin^2 v)`` of ``dv^2 + cos^2 v g_{S^p} + sin^2 v g_{S^q}``."""
    if not 0.0 < v < 0.5 * math.pi:
        raise DomainError(f"v must lie in (0, pi/2), got {v}")
    return 1.0, math.cos(v) ** 2, math.sin(v) ** 2


@dataclass(frozen=True)
class GraphJet:
    """Height ``u`` and its derivatives in unit-sphere normal coordinates at ``z``."""

    z: np.ndarray
    u: float
    du: np.ndarray
    ddu: np.ndarray

    def __post_init__(self):
        ddu = np.asarray(self.ddu, dtype=float)
        if np.max(np.abs(ddu - ddu.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(ddu), initial=0.0)):
            raise DomainError("second-derivative block is not symmetric")


def graph_mean_curvature_batch(p: int, q: int, u, du, ddu) -> np.ndarray:
    """Vectorised :func:`graph_mean_curvature` (normal ``-d/dv``)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    du = np.atleast_2d(np.asarray(du, dtype=float))
    ddu = np.asarray(ddu, dtype=float).reshape(len(u), p + q, p + q)
    if np.any(u <= 0) or np.any(u >= 0.5 * math.pi):
        raise GeometryError("height leaves (0, pi/2)")
    c, s = np.cos(u), np.sin(u)
    n = p + q
    a = np.empty((len(u), n))
    ap = np.empty((len(u), n))
    a[:, :p] = (c * c)[:, None]
    a[:, p:] = (s * s)[:, None]
    ap[:, :p] = (-2.0 * c * s)[:, None]
    ap[:, p:] = (2.0 * c * s)[:, None]
    # induced metric and unit normal (up) of the graph
    g = a[:, :, None] * np.eye(n) + du[:, :, None] * du[:, None, :]
    w = np.sum(du * du / a, axis=1)
    norm = np.sqrt(1.0 + w)
    ratio = ap / a
    b = (ddu - 0.5 * ap[:, :, None] * np.eye(n)
         - 0.5 * du[:, :, None] * du[:, None, :] * (ratio[:, :, None] + ratio[:, None, :]))
    b /= norm[:, None, None]
    det = np.linalg.det(g)
    if np.any(det <= 1e-14 * np.prod(a, axis=1)):
        raise GeometryError("degenerate induced metric")
    h_up = np.einsum("kij,kij->k", np.linalg.inv(g), b)
    return -h_up


def graph_mean_curvature(p: int, q: int, jet: GraphJet) -> float:
    """Mean curvature of ``z -> Xi(z, u(z))`` at the jet's base point.

    The induced metric is ``du du + cos^2 u g_{S^p} + sin^2 u g_{S^q}``; the
    second fundamental form uses the ambient Christoffel symbols of that
    warped product (tangential ones vanish in normal coordinates).  The
    normal is ``-d/dv`` to leading order, so ``u = t`` constant gives
    ``q cot t - p tan t``.
    """
    return float(graph_mean_curvature_batch(p, q, [jet.u], [jet.du], [jet.ddu])[0])


# --- parametric ---------------------------------------------------------------

def _fd_derivatives(embedding, points, h, order):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    npts, k = pts.shape
    X = np.asarray(embedding(pts))
    d1 = np.empty((npts, k, X.shape[1]))
    d2 = np.empty((npts, k, k, X.shape[1]))
    eye = np.eye(k) * h

    def f(shift):
        return np.asarray(embedding(pts + shift))

    if order == 2:
        for a in range(k):
            fp, fm = f(eye[a]), f(-eye[a])
            d1[:, a] = (fp - fm) / (2 * h)
            d2[:, a, a] = (fp - 2 * X + fm) / h**2
        for a in range(k):
            for b in range(a + 1, k):
                v = (f(eye[a] + eye[b]) - f(eye[a] - eye[b]) - f(-eye[a] + eye[b]) + f(-eye[a] - eye[b])) / (4 * h * h)
                d2[:, a, b] = d2[:, b, a] = v
    elif order == 4:
        for a in range(k):
            f1, f2, m1, m2 = f(eye[a]), f(2 * eye[a]), f(-eye[a]), f(-2 * eye[a])
            d1[:, a] = (-f2 + 8 * f1 - 8 * m1 + m2) / (12 * h)
            d2[:, a, a] = (-f2 + 16 * f1 - 30 * X + 16 * m1 - m2) / (12 * h * h)
        for a in range(k):
            for b in range(a + 1, k):
                acc = 0.0
                for (i, j, w) in ((1, 1, 16), (1, -1, -16), (-1, 1, -16), (-1, -1, 16),
                                  (2, 2, -1), (2, -2, 1), (-2, 2, 1), (-2, -2, -1)):
                    acc = acc + w * f(i * eye[a] + j * eye[b])
                d2[:, a, b] = d2[:, b, a] = acc / (48 * h * h)
    else:
        raise DomainError("order must be 2 or 4")
    return X, d1, d2


def parametric_mean_curvature(embedding, point, fd_step: float = 1e-4, orientation=None,
                              order: int = 2, flat: bool = False) -> np.ndarray:
    """Mean curvature of a parametrised hypersurface by finite differences.

    Parameters
    ----------
    embedding : callable
        Maps an ``(N, n)`` array of chart points to ``(N, n + 2)`` points on the
        unit sphere (or ``(N, n + 1)`` points of Euclidean space if ``flat``).
    point : array_like, shape (N, n)
    orientation : array_like, shape (N, dim), optional
        The normal is chosen with positive inner product against it.
    flat : bool
        Treat the target as flat Euclidean space instead of the round sphere.

    Returns
    -------
    ndarray
        ``H = g^{ab} <X_ab, N>``; for a slice with ``N = -d/dv`` this is
        ``q cot t - p tan t``.
    """
    X, d1, d2 = _fd_derivatives(embedding, point, fd_step, order)
    g = np.einsum("nai,nbi->nab", d1, d1)
    ev = np.linalg.eigvalsh(g)
    if np.any(ev[:, 0] <= 1e-12 * ev[:, -1]):
        raise GeometryError("near-singular first fundamental form")
    span = d1 if flat else np.concatenate([X[:, None, :], d1], axis=1)
    _, _, vt = np.linalg.svd(span)
    normal = vt[:, -1, :]
    if orientation is not None:
        sgn = np.sign(np.einsum("ni,ni->n", normal, np.atleast_2d(orientation)))
        if np.any(sgn == 0):
            raise GeometryError("orientation vector is tangent to the surface")
        normal *= sgn[:, None]
    b = np.einsum("nabi,ni->nab", d2, normal)
    return np.einsum("nab,nab->n", np.linalg.inv(g), b)


def slice_chart(p: int, q: int, t: float, z0):
    """Chart ``w -> Xi(exp_{z0}(w), t)`` of a slice, normal coordinates at ``z0``."""
    z0 = np.asarray(z0, dtype=float)
    x0, y0 = unit_blocks(z0, p)
    fx, fy = tangent_frames(x0)[0], tangent_frames(y0)[0]

    def emb(w):
        x = sphere_exp(x0[0], fx, w[:, :p])
        y = sphere_exp(y0[0], fy, w[:, p:])
        return np.concatenate([math.cos(t) * x, math.sin(t) * y], axis=1)

    return emb


def graph_chart(p: int, q: int, height, z0):
    """Chart ``w -> Xi(exp_{z0}(w), height(point))`` for a height function on the unit product."""
    z0 = np.asarray(z0, dtype=float)
    x0, y0 = unit_blocks(z0, p)
    fx, fy = tangent_frames(x0)[0], tangent_frames(y0)[0]

    def emb(w):
        x = sphere_exp(x0[0], fx, w[:, :p])
        y = sphere_exp(y0[0], fy, w[:, p:])
        v = np.asarray(height(np.concatenate([x, y], axis=1)), dtype=float).reshape(-1, 1)
        return np.concatenate([np.cos(v) * x, np.sin(v) * y], axis=1)

    return emb


def down_direction(points_on_sphere, p):
    """``-d/dv`` at points of ``S^{n+1}`` written as ``(cos v x, sin v y)``."""
    P = np.atleast_2d(points_on_sphere)
    xs, ys = P[:, : p + 1], P[:, p + 1:]
    c = np.linalg.norm(xs, axis=1, keepdims=True)
    s = np.linalg.norm(ys, axis=1, keepdims=True)
    return np.concatenate([s * xs / c, -c * ys / s], axis=1)


# --- the neck -----------------------------------------------------------------

def neck_embedding(params, field: GreensField, source_index: int, theta0, flat: bool = False):
    """Chart ``(s, w) -> Xi(z(eps phi(s) Theta(w)), t_mid + eps psi(s))`` at one source.

    ``Theta(w)`` is the exponential map of ``S^{n-1}`` at ``theta0``.  With
    ``flat=True`` the catenoid ``(eps phi Theta, eps psi)`` in ``R^{n+1}`` is
    returned instead.
    """
    n, eps = params.n, params.eps
    theta0 = np.asarray(theta0, dtype=float)
    frame = tangent_frames(theta0[None])[0]
    psi = asm._psi(n)

    def theta(w):
        if n == 1:
            return np.broadcast_to(theta0, (len(w), 1))
        return sphere_exp(theta0, frame, w)

    def emb(sw):
        s = sw[:, 0]
        rho = eps * catenoid.phi(n, s)
        zb = rho[:, None] * theta(sw[:, 1:])
        if flat:
            return np.concatenate([zb, (eps * psi(s))[:, None]], axis=1)
        z = asm.source_points(field, source_index, zb)
        return asm.toroidal_embed(params.p, params.q, z, params.t_mid + eps * psi(s))

    return emb


def _neck_outward(params, field, source_index, s, theta, h=1e-6):
    # derivative of the horizontal chart point in the radial direction, height frozen
    n, eps = params.n, params.eps
    rho = eps * catenoid.phi(n, s)
    v = params.t_mid + eps * asm._psi(n)(s)
    zp = asm.source_points(field, source_index, (rho * (1 + h))[:, None] * theta)
    zm = asm.source_points(field, source_index, (rho * (1 - h))[:, None] * theta)
    return asm.toroidal_embed(params.p, params.q, zp, v) - asm.toroidal_embed(params.p, params.q, zm, v)


def neck_mean_curvature(params, field, source_index, s, theta, fd_step=1e-3, order=4, flat=False):
    """Mean curvature at neck points ``(s, Theta)`` with the outward normal."""
    s = np.asarray(s, dtype=float)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    out = np.empty(len(s))
    # one chart per direction keeps Theta(w) regular at w = 0
    keys = np.round(theta, 12)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    for k in np.unique(inverse):
        sel = inverse == k
        th0 = theta[sel][0]
        emb = neck_embedding(params, field, source_index, th0, flat=flat)
        pts = np.concatenate([s[sel][:, None], np.zeros((int(sel.sum()), params.n - 1))], axis=1)
        if flat:
            ref = np.concatenate([np.tile(th0, (int(sel.sum()), 1)), np.zeros((int(sel.sum()), 1))], axis=1)
        else:
            ref = _neck_outward(params, field, source_index, s[sel], np.tile(th0, (int(sel.sum()), 1)))
        out[sel] = parametric_mean_curvature(emb, pts, fd_step, ref, order=order, flat=flat)
    return out


# --- verification -------------------------------------------------------------

@dataclass
class CurvatureReport:
    gamma: float
    eps: float
    H_t: float
    region_weighted_max: dict
    region_raw_max: dict
    global_weighted: float
    scaled_global: float
    cap_constant_near: float
    cap_constant_far: float
    neck_constant: float
    per_point: dict = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict:
        keys = ("gamma", "eps", "H_t", "region_weighted_max", "region_raw_max", "global_weighted",
                "scaled_global", "cap_constant_near", "cap_constant_far", "neck_constant")
        return {k: getattr(self, k) for k in keys}


def atlas_mean_curvature(atlas, field: GreensField, neck_fd_step: float = 1e-3, neck_order: int = 4):
    """Mean curvature at every atlas point with the into-the-slab normal."""
    params = atlas.params
    p, q = params.p, params.q
    H = np.empty(len(atlas))
    for region in (asm.CAP_PLUS, asm.CAP_MINUS):
        sel = atlas.region == region
        side = "upper" if region == asm.CAP_PLUS else "lower"
        u, du, ddu = asm.height_jets(params, field, atlas.z[sel], region, side, None)
        hd = graph_mean_curvature_batch(p, q, u, du, ddu)
        H[sel] = hd if side == "upper" else -hd
    m = field.gluing.m
    for k in range(m):
        for sg, side in ((1, "upper"), (-1, "lower")):
            sel = atlas.mask(asm.TRANSITION, k, sg)
            if not np.any(sel):
                continue
            u, du, ddu = asm.height_jets(params, field, atlas.z[sel], asm.TRANSITION, side, k)
            hd = graph_mean_curvature_batch(p, q, u, du, ddu)
            H[sel] = hd if side == "upper" else -hd
        sel = atlas.mask(asm.NECK, k)
        if np.any(sel):
            zb = atlas.z_bar[sel]
            theta = zb / np.linalg.norm(zb, axis=1, keepdims=True)
            H[sel] = neck_mean_curvature(params, field, k, atlas.s[sel], theta, neck_fd_step, neck_order)
    return H


def verify_cmc_error(atlas, greens_field: GreensField, gamma: float, far_radius: float = 0.3,
                     neck_fd_step: float = 1e-3) -> CurvatureReport:
    """Weighted sup of ``zeta^{2-gamma} |H - H_t|`` by region, plus envelope fits."""
    params = atlas.params
    n = params.n
    if not 2 - n < gamma < 0:
        raise DomainError(f"gamma must lie in ({2 - n}, 0), got {gamma}")
    H = atlas_mean_curvature(atlas, greens_field, neck_fd_step)
    Ht = mean_curvature_at(params.p, params.q, params.t)
    err = np.abs(H - Ht)
    weighted = atlas.weight ** (2.0 - gamma) * err
    reg_w, reg_raw = {}, {}
    for region, name in asm.REGION_NAMES.items():
        sel = atlas.region == region
        if np.any(sel):
            reg_w[name] = float(weighted[sel].max())
            reg_raw[name] = float(err[sel].max())
    glob = float(weighted.max())
    eps = params.eps
    dist = np.min(greens_field.distances(atlas.z), axis=1)
    caps = np.isin(atlas.region, (asm.CAP_PLUS, asm.CAP_MINUS))
    ratio = err * dist**n / eps**n
    near = caps & (dist < far_radius)
    far = caps & (dist >= far_radius)
    neck = atlas.region == asm.NECK
    env = eps + np.cosh(atlas.s[neck]) ** (-n)
    rep = CurvatureReport(
        gamma=gamma, eps=eps, H_t=Ht, region_weighted_max=reg_w, region_raw_max=reg_raw,
        global_weighted=glob, scaled_global=glob / eps ** (2.0 - gamma),
        cap_constant_near=float(ratio[near].max()) if np.any(near) else 0.0,
        cap_constant_far=float(ratio[far].max()) if np.any(far) else 0.0,
        neck_constant=float((err[neck] / env).max()) if np.any(neck) else 0.0,
        per_point={"H": H, "error": err, "weighted": weighted, "dist": dist},
    )
    return rep


def report_csv(atlas, report: CurvatureReport, precision: int = 10) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["region", "mu", "side", "zeta", "H", "H_t", "weighted_error"])
    fmt = f"{{:.{precision}e}}"
    H = report.per_point["H"]
    wt = report.per_point["weighted"]
    for k in range(len(atlas)):
        w.writerow([asm.REGION_NAMES[int(atlas.region[k])], int(atlas.mu_index[k]),
                    asm._SIDE_NAMES[int(atlas.side[k])], fmt.format(atlas.weight[k]),
                    fmt.format(H[k]), fmt.format(report.H_t), fmt.format(wt[k])])
    return buf.getvalue()


# --- linearisation ------------------------------------------------------------

def mode_function(p: int, q: int, mode: ModeIndex):
    """``Re (x_0 + i x_1)^i Re (y_0 + i y_1)^j`` with jets in normal coordinates.

    Returns a callable ``z, frames -> (value, grad, hess)``.
    """
    def hom(v, fr, deg):
        # value, tangential gradient and Hessian of Re (v0 + i v1)^deg restricted to the sphere
        zc = v[:, 0] + 1j * v[:, 1]
        val = np.real(zc**deg)
        # ambient gradient and Hessian of the harmonic polynomial
        dim = v.shape[1]
        g = np.zeros((len(v), dim))
        hmat = np.zeros((len(v), dim, dim))
        if deg >= 1:
            d1 = deg * zc ** (deg - 1)
            g[:, 0] = np.real(d1)
            g[:, 1] = np.real(1j * d1)
        if deg >= 2:
            d2 = deg * (deg - 1) * zc ** (deg - 2)
            hmat[:, 0, 0] = np.real(d2)
            hmat[:, 0, 1] = hmat[:, 1, 0] = np.real(1j * d2)
            hmat[:, 1, 1] = np.real(-d2)
        # restriction: grad_T = F g, Hess_T = F H F^T - (v . g) I
        gt = np.einsum("nkd,nd->nk", fr, g)
        radial = np.einsum("nd,nd->n", v, g)
        ht = np.einsum("nkd,nde,nle->nkl", fr, hmat, fr) - radial[:, None, None] * np.eye(fr.shape[1])
        return val, gt, ht

    def fn(z, frames):
        x, y = unit_blocks(z, p)
        vx, gx, hx = hom(x, frames[0], mode.i)
        vy, gy, hy = hom(y, frames[1], mode.j)
        n = p + q
        grad = np.concatenate([gx * vy[:, None], vx[:, None] * gy], axis=1)
        hess = np.zeros((len(vx), n, n))
        hess[:, :p, :p] = hx * vy[:, None, None]
        hess[:, p:, p:] = vx[:, None, None] * hy
        cross = gx[:, :, None] * gy[:, None, :]
        hess[:, :p, p:] = cross
        hess[:, p:, :p] = np.transpose(cross, (0, 2, 1))
        return vx * vy, grad, hess

    return fn


def linearization_check(p: int, q: int, t: float, mode: ModeIndex, eps_fd: float = 1e-4,
                        fd_step: float | None = None, samples: int = 64, seed: int = 0):
    """Central difference of ``H`` along a mode versus ``lam_ij(t)`` times the mode.

    The slice is displaced by ``eps_fd`` times the mode along its normal
    ``-d/dv``, i.e. to heights ``t -+ eps_fd e_ij``, so the derivative is the
    Jacobi operator applied to the mode.

    ``H`` is evaluated with the exact graph formula (``fd_step=None``) or with
    the parametric finite-difference formula at that step.  Returns
    ``(max relative error, derivative samples, predicted samples)``; the
    relative error is measured against the sup of the prediction, or is the
    absolute sup when the eigenvalue vanishes.
    """
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(samples, p + q + 2))
    x, y = unit_blocks(z, p)
    z = np.concatenate([x, y], axis=1)
    frames = (tangent_frames(x), tangent_frames(y))
    fn = mode_function(p, q, mode)
    val, grad, hess = fn(z, frames)
    lam = mode_eigenvalue(p, q, t, mode.i, mode.j)

    def H_of(e):
        if fd_step is None:
            return graph_mean_curvature_batch(p, q, t + e * val, e * grad, e * hess)
        out = np.empty(samples)
        for k in range(samples):
            def height(pts, k=k):
                xx, yy = unit_blocks(pts, p)
                fr = (tangent_frames(xx), tangent_frames(yy))
                return t + e * fn(np.concatenate([xx, yy], axis=1), fr)[0]
            emb = graph_chart(p, q, height, z[k])
            ref = down_direction(emb(np.zeros((1, p + q))), p)
            out[k] = parametric_mean_curvature(emb, np.zeros((1, p + q)), fd_step, ref)[0]
        return out

    # displacement along -d/dv lowers the height
    deriv = (H_of(-eps_fd) - H_of(eps_fd)) / (2 * eps_fd)
    pred = lam * val
    scale = np.max(np.abs(pred))
    if scale < 1e-12:
        return float(np.max(np.abs(deriv))), deriv, pred
    return float(np.max(np.abs(deriv - pred)) / scale), deriv, pred


def neck_metric_defect(params, field: GreensField, s, theta, fd_step: float = 1e-4):
    """Max entry of the induced neck metric minus ``eps^2 phi^2 (ds^2 + g_{S^{n-1}})``."""
    s = np.asarray(s, dtype=float)
    theta = np.atleast_2d(theta)
    out = np.empty(len(s))
    for k in range(len(s)):
        emb = neck_embedding(params, field, 0, theta[k])
        pts = np.zeros((1, params.n))
        pts[0, 0] = s[k]
        _, d1, _ = _fd_derivatives(emb, pts, fd_step, 4)
        g = d1[0] @ d1[0].T
        ref = (params.eps * catenoid.phi(params.n, s[k])) ** 2 * np.eye(params.n)
        out[k] = np.max(np.abs(g - ref))
    return out
