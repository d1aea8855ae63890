"""Gluing parameters and a sampled atlas of the approximate CMC hypersurface.

Near each gluing point ``mu`` the approximate solution consists of an upper
and a lower graph over ``C_{t_*}``, a rescaled catenoidal neck joining them,
and two transition annuli where the graphs are blended into the neck with a
cutoff ``eta``.  Away from the gluing points it is the pair of graphs
``v = t^+ - eps^{n-1} Gamma`` and ``v = t^- + eps^{n-1} Gamma``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from . import catenoid
from ._geometry import sphere_exp, sphere_quadrature, tangent_frames, unit_blocks
from .clifford import DomainError, mean_curvature_at, minimal_angle
from .cutoff import eta
from .greens import (GreensField, angle_square_jets, evaluate, evaluate_jets,
                     radial_chain)
from .symmetry import SymmetryGroup

CHART_GUARD = 0.5
DEFAULT_WINDOW = 0.05
# fixed radius of the weight function's cap interpolation zone (the "r" of the weight definition)
WEIGHT_RADIUS = 0.25

CAP_PLUS, CAP_MINUS, NECK, TRANSITION = 0, 1, 2, 3
REGION_NAMES = {CAP_PLUS: "CapPlus", CAP_MINUS: "CapMinus", NECK: "Neck", TRANSITION: "Transition"}


_SIDE_NAMES = {1: "upper", -1: "lower", 0: ""}


class WindowError(ValueError):
    """``t`` lies outside the window where the gluing equations are solvable."""


class ChartError(ValueError):
    """A chart was evaluated outside its domain."""


# --- gluing parameters --------------------------------------------------------

@dataclass(frozen=True)
class GluingParameters:
    p: int
    q: int
    t: float
    t_plus: float
    t_minus: float
    eps: float
    r: float
    gamma_lambda: float
    neck_integral: float

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def t_mid(self) -> float:
        return 0.5 * (self.t_plus + self.t_minus)

    @property
    def s_max(self) -> float:
        """Neck truncation: ``phi(s_max) = eps^{-1/n}``, i.e. ``eps phi(s_max) = r``."""
        return catenoid.s_of_radius(self.n, self.r, self.eps)

    def mean_curvature(self) -> float:
        return mean_curvature_at(self.p, self.q, self.t)

    def equation_residual(self) -> float:
        """Residual of ``t^+ - t^- = eps I + 2 eps^{n-1} gamma``."""
        n = self.n
        return (self.t_plus - self.t_minus) - self.eps * self.neck_integral \
            - 2.0 * self.eps ** (n - 1) * self.gamma_lambda

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "t": self.t, "t_plus": self.t_plus,
                "t_minus": self.t_minus, "eps": self.eps, "r": self.r,
                "gamma_lambda": self.gamma_lambda, "neck_integral": self.neck_integral}


def match_translate(p: int, q: int, t: float) -> float:
    """``t^-`` in ``(0, t_*)`` with ``H(t^-) = -H(t)``."""
    ts = minimal_angle(p, q)
    if not ts < t < 0.5 * math.pi:
        raise DomainError(f"t must lie in (t_*, pi/2) = ({ts}, {0.5 * math.pi}), got {t}")
    target = -mean_curvature_at(p, q, t)
    lo = 1e-12
    return brentq(lambda s: mean_curvature_at(p, q, s) - target, lo, ts, xtol=1e-15, rtol=1e-15, maxiter=500)


def solve_neck_scale(p: int, q: int, t: float, gamma_lambda: float = 0.0,
                     window: float = DEFAULT_WINDOW) -> GluingParameters:
    """Solve ``t - t^- = eps I + 2 eps^{n-1} gamma`` for the neck scale ``eps``.

    The left side is monotone in ``eps`` up to ``eps_max`` (infinite when
    ``gamma >= 0``); the root is bracketed in ``(0, eps_max)``.
    """
    n = p + q
    ts = minimal_angle(p, q)
    if not 0.0 < t - ts <= window:
        raise WindowError(f"t - t_* = {t - ts:.4g} is outside the window (0, {window}]")
    if n >= 4:
        gamma_lambda = 0.0
    t_minus = match_translate(p, q, t)
    gap = t - t_minus
    integral = catenoid.neck_height_integral(n)

    def f(e):
        return e * integral + 2.0 * e ** (n - 1) * gamma_lambda - gap

    if gamma_lambda == 0.0:
        eps = gap / integral
    else:
        if gamma_lambda < 0:
            e_max = (integral / (2.0 * (n - 1) * -gamma_lambda)) ** (1.0 / (n - 2))
        else:
            e_max = gap / integral
        if f(e_max) < 0:
            raise WindowError(f"no positive root below eps_max = {e_max:.4g}; move t closer to t_*")
        eps = brentq(f, 0.0, e_max, xtol=1e-17, rtol=1e-15, maxiter=500)
    ratio = gap / eps / integral
    if not 0.5 <= ratio <= 2.0:
        raise WindowError(f"(t+ - t-)/eps = {ratio:.3f} I is not O(eps); t too far from t_*")
    return GluingParameters(p, q, t, t, t_minus, eps, eps ** ((n - 1) / n), float(gamma_lambda), integral)


# --- embeddings and charts ----------------------------------------------------

def toroidal_embed(p: int, q: int, z, v):
    """``(cos v x, sin v y)`` for ``z = (x, y)``; blocks of ``z`` are normalised first."""
    x, y = unit_blocks(z, p)
    v = np.asarray(v, dtype=float).reshape(-1, 1)
    out = np.concatenate([np.cos(v) * x, np.sin(v) * y], axis=1)
    return out[0] if np.ndim(z) == 1 else out


def base_pair(p: int, q: int) -> np.ndarray:
    """Point ``(e_1, e_1)`` of the unit product, which embeds to ``mu_0`` at ``t_*``."""
    z = np.zeros(p + q + 2)
    z[0] = 1.0
    z[p + 1] = 1.0
    return z


def normal_coords(p: int, q: int, z_bar, guard: float = CHART_GUARD, base=None, frames=None):
    """Geodesic normal coordinates of ``g_{t_*}`` at the base point.

    ``z_bar = (x_bar, y_bar)`` maps to ``(exp(x_bar / cos t_*), exp(y_bar / sin t_*))``
    on the unit product.  ``base`` and ``frames`` default to ``(e_1, e_1)``
    and the standard tangent frames there.
    """
    zb = np.atleast_2d(np.asarray(z_bar, dtype=float))
    if np.any(np.linalg.norm(zb, axis=1) > guard):
        raise ChartError(f"|z_bar| exceeds the chart guard {guard}")
    ts = minimal_angle(p, q)
    if base is None:
        base = base_pair(p, q)
    xb, yb = base[: p + 1], base[p + 1:]
    if frames is None:
        frames = (tangent_frames(xb[None])[0], tangent_frames(yb[None])[0])
    x = sphere_exp(xb, frames[0], zb[:, :p] / math.cos(ts))
    y = sphere_exp(yb, frames[1], zb[:, p:] / math.sin(ts))
    out = np.concatenate([x, y], axis=1)
    return out[0] if np.ndim(z_bar) == 1 else out


def inverse_normal_coords(p: int, q: int, z, base, frames):
    """Inverse of :func:`normal_coords` (log map, scaled)."""
    ts = minimal_angle(p, q)
    x, y = unit_blocks(z, p)
    out = []
    for v, b, fr, scale in ((x, base[: p + 1], frames[0], math.cos(ts)),
                            (y, base[p + 1:], frames[1], math.sin(ts))):
        a = np.clip(v @ b, -1.0, 1.0)
        th = np.arccos(a)
        tang = v @ fr.T
        nt = np.linalg.norm(tang, axis=1, keepdims=True)
        out.append(scale * np.where(nt > 0, th[:, None] * tang / np.where(nt > 0, nt, 1.0), 0.0))
    return np.concatenate(out, axis=1)


# --- heights ------------------------------------------------------------------

class _Psi:
    """Memoised ``psi`` with sign handling, shared by all evaluations of one ``n``."""

    def __init__(self, n):
        self.prof = catenoid.CatenoidProfile(n)

    def __call__(self, s):
        return self.prof.psi_array(s)


_PSI_CACHE: dict = {}


def _psi(n):
    if n not in _PSI_CACHE:
        _PSI_CACHE[n] = _Psi(n)
    return _PSI_CACHE[n]


def _s_of_radius_array(n, rho, eps):
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    return np.array([catenoid.s_of_radius(n, float(x), eps) for x in rho])


def neck_height(params: GluingParameters, s):
    """``(t^+ + t^-)/2 + eps psi(s)``."""
    return params.t_mid + params.eps * _psi(params.n)(s)


def graph_height(params: GluingParameters, gamma_values, side: str):
    e = params.eps ** (params.n - 1)
    if side == "upper":
        return params.t_plus - e * np.asarray(gamma_values)
    if side == "lower":
        return params.t_minus + e * np.asarray(gamma_values)
    raise DomainError(f"side must be 'upper' or 'lower', got {side!r}")


def transition_height(params: GluingParameters, greens_field: GreensField, z_bar, side: str,
                      source_index: int = 0):
    """Blended height ``eta(|z_bar|/r) graph + (1 - eta) neck`` in the chart at a source."""
    zb = np.atleast_2d(np.asarray(z_bar, dtype=float))
    rho = np.linalg.norm(zb, axis=1)
    r = params.r
    if np.any(rho < 0.25 * r) or np.any(rho > 4.0 * r):
        raise ChartError(f"|z_bar| outside [r/4, 4r] with r = {r:.4g}")
    pts = source_points(greens_field, source_index, zb)
    gam = evaluate(greens_field, pts)
    gam = np.atleast_1d(gam)
    s = _s_of_radius_array(params.n, rho, params.eps)
    if side == "lower":
        s = -s
    e = eta(rho / r)[0]
    out = e * graph_height(params, gam, side) + (1.0 - e) * neck_height(params, s)
    return out if np.ndim(z_bar) > 1 else float(out[0])


def source_points(field: GreensField, source_index: int, z_bar):
    """Unit-product points of the normal chart at a source of ``field``."""
    x, y = field._xhat[source_index], field._yhat[source_index]
    base = np.concatenate([x, y])
    return normal_coords(field.p, field.q, z_bar, guard=math.inf, base=base,
                         frames=(tangent_frames(x[None])[0], tangent_frames(y[None])[0]))


def height_jets(params: GluingParameters, field: GreensField, z, region, side, source_index,
                frames=None):
    """Value, gradient and Hessian of the height function at unit-product points ``z``.

    Used for cap and transition points; derivatives are in unit-sphere normal
    coordinates at each point.  Transition heights depend on ``z`` through
    ``|z_bar|^2 = cos^2 t_* theta^2 + sin^2 t_* phi^2`` and through ``Gamma``.
    """
    p, q, n = params.p, params.q, params.n
    x, y = unit_blocks(z, p)
    if frames is None:
        frames = (tangent_frames(x), tangent_frames(y))
    gv, gg, gh = evaluate_jets(field, np.concatenate([x, y], axis=1), frames)
    sign = -1.0 if side == "upper" else 1.0
    base = params.t_plus if side == "upper" else params.t_minus
    e = params.eps ** (n - 1)
    u = base + sign * e * gv
    du = sign * e * gg
    hu = sign * e * gh
    if region != TRANSITION:
        return u, du, hu
    ts = minimal_angle(p, q)
    c2, s2 = math.cos(ts) ** 2, math.sin(ts) ** 2
    tx, dx, hx = angle_square_jets(x, frames[0], field._xhat[source_index])
    ty, dy, hy = angle_square_jets(y, frames[1], field._yhat[source_index])
    P, Q = c2 * tx, s2 * ty
    w = _blend_profile(params, P + Q, side)
    # blended = eta * graph + (1 - eta) * neck, with eta and neck radial
    eta_v, eta_w, eta_ww = w["eta"]
    nk, nk_w, nk_ww = w["neck"]
    g_eta = radial_chain((p, q), (eta_v, eta_w, eta_w, eta_ww, eta_ww, eta_ww), c2 * dx, s2 * dy, c2 * hx, s2 * hy)
    g_nk = radial_chain((p, q), (nk, nk_w, nk_w, nk_ww, nk_ww, nk_ww), c2 * dx, s2 * dy, c2 * hx, s2 * hy)
    ev, eg, eh = g_eta
    nv, ng, nh = g_nk
    val = ev * u + (1.0 - ev) * nv
    grad = eg * (u - nv)[:, None] + ev[:, None] * du + (1.0 - ev)[:, None] * ng
    outer = eg[:, :, None] * (du - ng)[:, None, :]
    hess = (eh * (u - nv)[:, None, None] + outer + np.transpose(outer, (0, 2, 1))
            + ev[:, None, None] * hu + (1.0 - ev)[:, None, None] * nh)
    return val, grad, hess


def _blend_profile(params, w, side):
    """Radial profiles ``eta(sqrt(w)/r)`` and the neck height as functions of ``w = |z_bar|^2``."""
    n, r, eps = params.n, params.r, params.eps
    rho = np.sqrt(w)
    e0, e1, e2 = eta(rho / r)
    eta_w = e1 / (r * 2.0 * rho)
    eta_ww = (e2 / r**2 - e1 / (r * rho)) / (4.0 * w)
    s = _s_of_radius_array(n, rho, eps)
    if side == "lower":
        s = -s
    # d(height)/d(rho) = eps psi'(s) / (eps phi'(s)) = phi^{2-n} / phi'
    ph, ph1, ph2 = catenoid.phi_derivatives(n, s)
    h = neck_height(params, s)
    hr = ph ** (2 - n) / ph1
    # d/d rho of hr, with ds/d rho = 1 / (eps phi')
    hrr = ((2 - n) * ph ** (1 - n) * ph1 * ph1 - ph ** (2 - n) * ph2) / ph1**2 / (eps * ph1)
    nk_w = hr / (2.0 * rho)
    nk_ww = (hrr - hr / rho) / (4.0 * w)
    return {"eta": (e0, eta_w, eta_ww), "neck": (h, nk_w, nk_ww)}


# --- atlas --------------------------------------------------------------------

@dataclass(frozen=True)
class AtlasPoint:
    region: str
    mu_index: int
    side: str
    chart_coords: tuple
    embedding: np.ndarray
    weight: float


@dataclass
class SurfaceAtlas:
    """Sampled approximate solution.  Per-point data are stored column-wise."""

    params: GluingParameters
    group: SymmetryGroup
    region: np.ndarray
    mu_index: np.ndarray
    side: np.ndarray          # +1 upper, -1 lower
    z: np.ndarray             # unit-product base point of the sample
    z_bar: np.ndarray         # chart coordinates at the assigned source (NaN on far caps)
    s: np.ndarray             # neck parameter (NaN off the neck)
    embedding: np.ndarray
    weight: np.ndarray
    resolution: dict = field(default_factory=dict)
    weight_radius: float = WEIGHT_RADIUS

    def __len__(self):
        return len(self.weight)

    @property
    def points(self):
        out = []
        for k in range(len(self)):
            reg = int(self.region[k])
            if reg == NECK:
                chart = (float(self.s[k]),) + tuple(self.z_bar[k] / np.linalg.norm(self.z_bar[k]))
            elif reg == TRANSITION:
                chart = tuple(self.z_bar[k])
            else:
                chart = tuple(self.z[k])
            out.append(AtlasPoint(self.tag(k), int(self.mu_index[k]), _SIDE_NAMES[int(self.side[k])], chart,
                                  self.embedding[k], float(self.weight[k])))
        return out

    def tag(self, k: int) -> str:
        reg = int(self.region[k])
        if reg in (CAP_PLUS, CAP_MINUS):
            return REGION_NAMES[reg]
        if reg == NECK:
            return f"Neck({int(self.mu_index[k])})"
        side = _SIDE_NAMES[int(self.side[k])]
        return f"Transition({int(self.mu_index[k])},{side})"

    def tags(self) -> set:
        return {self.tag(k) for k in range(len(self))}

    def mask(self, region: int, mu: int | None = None, side: int | None = None):
        m = self.region == region
        if mu is not None:
            m &= self.mu_index == mu
        if side is not None:
            m &= self.side == side
        return m


def _directions(n, resolution):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    nodes, _ = sphere_quadrature(n - 1, resolution, 2 * resolution, offset=0.5)
    return nodes


def _cap_weight(dist, weight_radius):
    rw = weight_radius
    out = np.ones_like(dist)
    inner = dist <= rw
    out[inner] = dist[inner]
    mid = (dist > rw) & (dist < 2 * rw)
    # log zeta linear in log dist from (rw, log rw) to (2 rw, 0)
    frac = (np.log(dist[mid]) - math.log(rw)) / math.log(2.0)
    out[mid] = np.exp((1.0 - frac) * math.log(rw))
    return out


def weight_rules(params: GluingParameters, region: int, rho=None, s=None,
                 weight_radius: float = WEIGHT_RADIUS):
    """The weight ``zeta_t`` under each region's rule."""
    if region == NECK:
        return params.eps * np.cosh(np.asarray(s, dtype=float))
    if region == TRANSITION:
        return np.asarray(rho, dtype=float)
    return _cap_weight(np.atleast_1d(np.asarray(rho, dtype=float)), weight_radius)


DEFAULT_RESOLUTION = {
    "cap_x": 24,          # azimuthal nodes per sphere factor of the cap grid
    "cap_polar": 8,       # polar nodes per extra sphere dimension
    "cap_rings": 10,      # radial shells between r and the ring radius near each source
    "ring_radius": 0.4,
    "directions": 6,      # polar resolution of the direction sphere S^{n-1}
    "neck_s": 25,
    "transition_rho": 9,
}


def build_atlas(p: int, q: int, t: float, group: SymmetryGroup, greens_field: GreensField,
                resolution: dict | None = None, window: float = DEFAULT_WINDOW,
                params: GluingParameters | None = None,
                weight_radius: float = WEIGHT_RADIUS, dedupe_tol: float = 1e-9) -> SurfaceAtlas:
    """Sample caps, necks and transitions, then symmetrise under ``group``."""
    res = dict(DEFAULT_RESOLUTION)
    res.update(resolution or {})
    n = p + q
    if params is None:
        gam = greens_field.gamma_lambda if n == 3 else 0.0
        params = solve_neck_scale(p, q, t, gam, window)
    r = params.r
    gl = greens_field.gluing
    ts = minimal_angle(p, q)
    dirs = _directions(n, res["directions"])
    base = np.concatenate([greens_field._xhat[0], greens_field._yhat[0]])
    frames0 = (tangent_frames(greens_field._xhat[:1])[0], tangent_frames(greens_field._yhat[:1])[0])

    rows = []   # (region, side, z, z_bar, s, v)

    # caps: product grid plus geometric shells around mu_0
    nx, _ = sphere_quadrature(p, res["cap_polar"], res["cap_x"], offset=0.25)
    ny, _ = sphere_quadrature(q, res["cap_polar"], res["cap_x"], offset=0.25)
    grid = np.concatenate([np.repeat(nx, len(ny), axis=0), np.tile(ny, (len(nx), 1))], axis=1)
    shells = np.geomspace(r, res["ring_radius"], res["cap_rings"])
    ring = source_points(greens_field, 0, (shells[:, None, None] * dirs[None]).reshape(-1, n))
    cap_z = np.concatenate([grid, ring], axis=0)
    keep = np.min(greens_field.distances(cap_z), axis=1) >= r * (1 - 1e-12)
    cap_z = cap_z[keep]
    gam = np.atleast_1d(evaluate(greens_field, cap_z))
    for region, side in ((CAP_PLUS, "upper"), (CAP_MINUS, "lower")):
        v = graph_height(params, gam, side)
        rows.append((region, 1 if side == "upper" else -1, cap_z, None, None, v))

    # neck at mu_0
    s_max = params.s_max
    s_grid = np.linspace(-s_max, s_max, res["neck_s"])
    S, D = np.repeat(s_grid, len(dirs)), np.tile(dirs, (len(s_grid), 1))
    rho = params.eps * catenoid.phi(n, S)
    zb = rho[:, None] * D
    zn = normal_coords(p, q, zb, guard=math.inf, base=base, frames=frames0)
    rows.append((NECK, 0, zn, zb, S, neck_height(params, S)))

    # transitions at mu_0
    tr = np.geomspace(0.5 * r, 2.0 * r, res["transition_rho"])
    zb = (tr[:, None, None] * dirs[None]).reshape(-1, n)
    zt = normal_coords(p, q, zb, guard=math.inf, base=base, frames=frames0)
    for side, sg in (("upper", 1), ("lower", -1)):
        rows.append((TRANSITION, sg, zt, zb, None, transition_height(params, greens_field, zb, side)))

    region = np.concatenate([np.full(len(rw[2]), rw[0]) for rw in rows])
    side = np.concatenate([np.full(len(rw[2]), rw[1]) for rw in rows])
    z = np.concatenate([rw[2] for rw in rows])
    v = np.concatenate([np.asarray(rw[5]) for rw in rows])
    s_col = np.concatenate([rw[4] if rw[4] is not None else np.full(len(rw[2]), np.nan) for rw in rows])

    # symmetrise: every group element applied to every model point
    elems = list(group.elements)
    Z = np.concatenate([g.apply(z) for g in elems])
    REG = np.tile(region, len(elems))
    SIDE = np.tile(side, len(elems))
    V = np.tile(v, len(elems))
    SC = np.tile(s_col, len(elems))
    EMB = toroidal_embed(p, q, Z, V)
    EMB /= np.linalg.norm(EMB, axis=1, keepdims=True)
    keep = _dedupe(EMB, REG, dedupe_tol)
    Z, REG, SIDE, V, SC, EMB = Z[keep], REG[keep], SIDE[keep], V[keep], SC[keep], EMB[keep]

    # assign sources and chart coordinates
    dist = greens_field.distances(Z)
    mu = np.argmin(dist, axis=1)
    dmin = dist[np.arange(len(Z)), mu]
    zbar = np.full((len(Z), n), np.nan)
    for k in range(gl.m):
        sel = mu == k
        xb, yb = greens_field._xhat[k], greens_field._yhat[k]
        fr = (tangent_frames(xb[None])[0], tangent_frames(yb[None])[0])
        zbar[sel] = inverse_normal_coords(p, q, Z[sel], np.concatenate([xb, yb]), fr)
    far = np.isin(REG, (CAP_PLUS, CAP_MINUS)) & (dmin > res["ring_radius"] * 1.5)
    zbar[far] = np.nan
    mu_idx = np.where(np.isin(REG, (CAP_PLUS, CAP_MINUS)), -1, mu)

    weight = np.empty(len(Z))
    m_cap = np.isin(REG, (CAP_PLUS, CAP_MINUS))
    weight[m_cap] = weight_rules(params, CAP_PLUS, rho=dmin[m_cap], weight_radius=weight_radius)
    m_n = REG == NECK
    weight[m_n] = weight_rules(params, NECK, s=SC[m_n])
    m_t = REG == TRANSITION
    weight[m_t] = weight_rules(params, TRANSITION, rho=dmin[m_t])
    res["weight_radius"] = weight_radius
    return SurfaceAtlas(params, group, REG.astype(int), mu_idx.astype(int), SIDE.astype(int), Z, zbar, SC,
                        EMB, weight, res, weight_radius)


def _dedupe(emb, region, tol):
    tree = cKDTree(np.concatenate([emb, 10.0 * region[:, None]], axis=1))
    pairs = tree.query_pairs(tol, output_type="ndarray")
    drop = np.zeros(len(emb), dtype=bool)
    if len(pairs):
        # keep the first index of each cluster
        drop[np.maximum(pairs[:, 0], pairs[:, 1])] = True
    return ~drop


def weighted_sup_norm(atlas: SurfaceAtlas, values, gamma: float) -> float:
    """``max zeta^{-gamma} |value|`` over the atlas."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError("values must be finite")
    return float(np.max(atlas.weight ** (-gamma) * np.abs(values)))


def invariance_defect(atlas: SurfaceAtlas) -> float:
    """Largest distance from a group image of an atlas point to the point cloud."""
    tree = cKDTree(atlas.embedding)
    worst = 0.0
    p = atlas.params.p
    for g in atlas.group.elements:
        img = np.concatenate([atlas.embedding[:, : p + 1] @ g.sigma_p.T,
                              atlas.embedding[:, p + 1:] @ g.sigma_q.T], axis=1)
        d, _ = tree.query(img)
        worst = max(worst, float(d.max()))
    return worst


# --- export -------------------------------------------------------------------

def atlas_csv(atlas: SurfaceAtlas, precision: int = 10) -> str:
    """CSV text with a JSON header line of the gluing parameters."""
    buf = io.StringIO()
    header = {"params": atlas.params.to_dict(), "resolution": atlas.resolution}
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    n = atlas.params.n
    w = csv.writer(buf, lineterminator="\n")
    cols = (["region", "mu", "side", "s"] + [f"zbar{k}" for k in range(n)]
            + [f"X{k}" for k in range(n + 2)] + ["weight"])
    w.writerow(cols)
    fmt = f"{{:.{precision}e}}"
    for k in range(len(atlas)):
        row = [REGION_NAMES[int(atlas.region[k])], int(atlas.mu_index[k]), _SIDE_NAMES[int(atlas.side[k])]]
        row.append("" if np.isnan(atlas.s[k]) else fmt.format(atlas.s[k]))
        row += ["" if np.isnan(c) else fmt.format(c) for c in atlas.z_bar[k]]
        row += [fmt.format(c) for c in atlas.embedding[k]]
        row.append(fmt.format(atlas.weight[k]))
        w.writerow(row)
    return buf.getvalue()


# --- structural diagnostics ---------------------------------------------------

def weight_continuity(params: GluingParameters, weight_radius: float = WEIGHT_RADIUS) -> dict:
    """Ratios of the two adjacent weight rules at every region boundary."""
    n, r, eps = params.n, params.r, params.eps
    out = {}
    s_r = catenoid.s_of_radius(n, r, eps)
    s_half = catenoid.s_of_radius(n, 0.5 * r, eps)
    out["neck/transition at r/2"] = float(eps * math.cosh(s_half) / (0.5 * r))
    out["neck/transition at r"] = float(eps * math.cosh(s_r) / r)
    out["neck/cap at r"] = float(eps * math.cosh(s_r) / _cap_weight(np.array([r]), weight_radius)[0])
    for rho in (r, 2.0 * r):
        out[f"transition/cap at {rho / r:g}r"] = float(rho / _cap_weight(np.array([rho]), weight_radius)[0])
    for rho in (weight_radius, 2.0 * weight_radius):
        inside = _cap_weight(np.array([rho * (1 - 1e-12)]), weight_radius)[0]
        outside = _cap_weight(np.array([rho * (1 + 1e-12)]), weight_radius)[0]
        out[f"cap rules at {rho / weight_radius:g}r_w"] = float(inside / outside)
    return out


def sheet_heights(atlas: SurfaceAtlas) -> np.ndarray:
    """Height ``v`` of every atlas point, read back from its embedding."""
    p = atlas.params.p
    e = atlas.embedding
    return np.arctan2(np.linalg.norm(e[:, p + 1:], axis=1), np.linalg.norm(e[:, : p + 1], axis=1))


def cap_deviation(atlas: SurfaceAtlas) -> float:
    """``max |v - t_*|`` over the upper cap."""
    ts = minimal_angle(atlas.params.p, atlas.params.q)
    sel = atlas.region == CAP_PLUS
    return float(np.max(np.abs(sheet_heights(atlas)[sel] - ts)))
