"""Green's function of the Jacobi operator on the minimal Clifford hypersurface.

``Gamma`` solves ``L Gamma = -c_n sum_mu delta_mu`` on ``C_{t_*}``, where
``L = Delta + |B|^2 + n`` and ``c_n = |S^{n-1}|``.  In the eigenbasis of
``L`` the solution is

    Gamma(z) = sum_mu sum_{(i,j) != (1,1)} -c_n / (V lam_ij)
               Z^p_i(x . x_mu) Z^q_j(y . y_mu),

with ``Z^d_k`` the reproducing kernel of degree-``k`` harmonics on the unit
``S^d`` and ``V = cos^p t_* sin^q t_*`` the volume factor of the metric.

A truncated version of that series ("raw" mode) converges slowly near the
sources.  The default "subtracted" mode splits off an explicit local
parametrix ``chi(r) S(z_bar)`` around every source, where ``S`` is the
Euclidean fundamental solution plus the next correction term, and expands
only the much smoother remainder.  The parametrix's own mode coefficients are
computed by polar Gauss quadrature so that the two representations describe
the same function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._geometry import sphere_exp, sphere_quadrature, tangent_frames, unit_blocks
from .clifford import DomainError, jacobi_eigenvalue_table, minimal_angle
from .cutoff import radial_cutoff
from .symmetry import GluingSet, kernel_orthogonality_matrix

FORMAT_NAME = "cmclab.greens"
FORMAT_VERSION = 1
DEFAULT_C_EVAL = 6.0
KERNEL_TOL = 1e-8


class SolvabilityError(ValueError):
    """The source distribution has a nonzero projection onto the Jacobi kernel."""


class InternalConsistencyError(ArithmeticError):
    """A zero eigenvalue appeared outside the kernel mode."""


class ExpansionFitError(ArithmeticError):
    """The near-source fit does not match the expected power law."""


class AccuracyWarning(UserWarning):
    """A raw-series evaluation point lies inside the exclusion radius."""


def sphere_volume(d: int) -> float:
    """Volume ``2 pi^{(d+1)/2} / Gamma((d+1)/2)`` of the unit ``d``-sphere."""
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d}")
    return _kernels.sphere_area(d)


# --- local parametrix ---------------------------------------------------------

@dataclass(frozen=True)
class Parametrix:
    """``chi(r) S(P, Q)`` with ``P = |x_bar|^2``, ``Q = |y_bar|^2``, ``r^2 = P + Q``.

    ``S = r^{2-n}/(n-2) - r^{4-n} (A0/(2(4-n)) + A2 (P/r^2 - p/n)/(8-4n))``,
    with the ``A0`` term replaced by ``-(A0/2) log r`` when ``n = 4``.  This
    cancels the ``r^{-n}`` and ``r^{2-n}`` terms of ``L S`` in normal
    coordinates of ``C_{t_*}``.
    """

    p: int
    q: int
    r_inner: float
    r_outer: float

    @property
    def n(self) -> int:
        return self.p + self.q

    def _terms(self):
        p, q, n = self.p, self.q, self.n
        a0 = (n - 2) / 3.0 + 2.0 * n / (n - 2)
        a2 = (n / 3.0) * (1.0 / q - 1.0 / p)
        k2 = a2 / (8.0 - 4.0 * n)
        lead = (2.0 - n) / 2.0
        nxt = (4.0 - n) / 2.0
        # (coefficient, power of P, power of u = P + Q)
        if n == 4:
            terms = [(1.0 / (n - 2), 0, lead), (k2 * p / n, 0, nxt), (-k2, 1, lead)]
            return terms, -a0 / 4.0
        k0 = a0 / (2.0 * (4.0 - n))
        terms = [(1.0 / (n - 2), 0, lead), (-k0 + k2 * p / n, 0, nxt), (-k2, 1, lead)]
        return terms, 0.0

    def profile(self, P, Q):
        """``S`` and its ``(P, Q)`` derivatives ``S_P, S_Q, S_PP, S_PQ, S_QQ``."""
        P = np.asarray(P, dtype=float)
        u = P + np.asarray(Q, dtype=float)
        terms, log_coef = self._terms()
        out = [np.zeros_like(u) for _ in range(6)]
        for c, e, k in terms:
            pe = P if e == 1 else np.ones_like(P)
            uk = u**k
            out[0] += c * pe * uk
            mp = (e * uk + k * pe * u ** (k - 1)) if e else k * u ** (k - 1)
            mq = k * pe * u ** (k - 1)
            mpp = 2 * e * k * u ** (k - 1) + k * (k - 1) * pe * u ** (k - 2)
            mpq = e * k * u ** (k - 1) + k * (k - 1) * pe * u ** (k - 2)
            mqq = k * (k - 1) * pe * u ** (k - 2)
            out[1] += c * mp
            out[2] += c * mq
            out[3] += c * mpp
            out[4] += c * mpq
            out[5] += c * mqq
        if log_coef:
            out[0] += log_coef * np.log(u)
            for idx in (1, 2):
                out[idx] += log_coef / u
            for idx in (3, 4, 5):
                out[idx] += -log_coef / u**2
        return out

    def cut_profile(self, P, Q):
        """``chi(sqrt(P + Q)) S`` and its ``(P, Q)`` derivatives; zero outside ``r_outer``."""
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        u = P + Q
        r = np.sqrt(u)
        inside = r < self.r_outer
        out = [np.zeros_like(u) for _ in range(6)]
        if not np.any(inside):
            return out
        Pi, Qi, ui, ri = P[inside], Q[inside], u[inside], r[inside]
        s, sp, sq, spp, spq, sqq = self.profile(Pi, Qi)
        chi, chi1, chi2 = radial_cutoff(ri, self.r_inner, self.r_outer)
        xu = chi1 / (2.0 * ri)
        xuu = (chi2 - chi1 / ri) / (4.0 * ui)
        out[0][inside] = chi * s
        out[1][inside] = xu * s + chi * sp
        out[2][inside] = xu * s + chi * sq
        out[3][inside] = xuu * s + 2.0 * xu * sp + chi * spp
        out[4][inside] = xuu * s + xu * (sp + sq) + chi * spq
        out[5][inside] = xuu * s + 2.0 * xu * sq + chi * sqq
        return out

    def zonal_coefficients(self, i_max: int, j_max: int, n_radial: int | None = None,
                           n_angular: int | None = None) -> np.ndarray:
        """Coefficients ``b_ij`` with ``chi S = sum b_ij Z_i(x . x_mu) Z_j(y . y_mu)``.

        Polar Gauss quadrature in ``(|x_bar|, |y_bar|) = r (cos beta, sin beta)``;
        the Jacobian cancels the ``r^{2-n}`` singularity.
        """
        p, q = self.p, self.q
        ts = minimal_angle(p, q)
        c, s = math.cos(ts), math.sin(ts)
        cap = max(i_max, j_max)
        nr = n_radial or max(96, 3 * cap)
        nb = n_angular or max(64, 2 * cap)
        xr, wr = np.polynomial.legendre.leggauss(nr)
        xb, wb = np.polynomial.legendre.leggauss(nb)
        r = 0.5 * self.r_outer * (xr + 1.0)
        wr = 0.5 * self.r_outer * wr
        beta = 0.25 * np.pi * (xb + 1.0)
        wb = 0.25 * np.pi * wb
        R, B = np.meshgrid(r, beta, indexing="ij")
        W = np.outer(wr, wb)
        th = R * np.cos(B) / c
        ph = R * np.sin(B) / s
        val = self.cut_profile((R * np.cos(B)) ** 2, (R * np.sin(B)) ** 2)[0]
        jac = R / (c * s) * np.sin(th) ** (p - 1) * np.sin(ph) ** (q - 1)
        jac *= _kernels.sphere_area(p - 1) if p > 1 else 2.0
        jac *= _kernels.sphere_area(q - 1) if q > 1 else 2.0
        wt = (W * val * jac).ravel()
        zp = _kernels.zonal_table(p, i_max, np.cos(th).ravel())[0]
        zq = _kernels.zonal_table(q, j_max, np.cos(ph).ravel())[0]
        raw = (zp * wt[:, None]).T @ zq
        zp1 = _kernels.zonal_norms(p, i_max) * _zonal_at_one(p, i_max)
        zq1 = _kernels.zonal_norms(q, j_max) * _zonal_at_one(q, j_max)
        return raw / np.outer(zp1, zq1)


def _zonal_at_one(d, deg):
    # C^alpha_k(1) (or T_k(1) = 1 on the circle)
    k = np.arange(deg + 1, dtype=float)
    if d == 1:
        return np.ones(deg + 1)
    from scipy.special import comb

    return comb(k + d - 2.0, k)


# --- the field ----------------------------------------------------------------

@dataclass
class GreensField:
    """Spectral representation of the Green's function for a gluing set.

    ``coefficients[i, j]`` are the per-source zonal mode coefficients
    ``-c_n / (V lam_ij)`` with the kernel block ``(1, 1)`` set to zero.  In
    subtracted mode the series actually summed uses
    ``remainder_coefficients = coefficients - b`` and the parametrix is added
    back in closed form.
    """

    p: int
    q: int
    gluing: GluingSet
    i_max: int
    j_max: int
    coefficients: np.ndarray
    c_n: float
    mode: str = "subtracted"
    parametrix: Parametrix | None = None
    remainder_coefficients: np.ndarray | None = None
    c_eval: float = DEFAULT_C_EVAL
    _xhat: np.ndarray = field(init=False, repr=False)
    _yhat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._xhat, self._yhat = unit_blocks(self.gluing.points, self.p)

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def t_star(self) -> float:
        return minimal_angle(self.p, self.q)

    @property
    def exclusion_radius(self) -> float:
        return self.c_eval / min(self.i_max, self.j_max)

    def series_coefficients(self) -> np.ndarray:
        if self.mode == "subtracted":
            return self.remainder_coefficients
        return self.coefficients

    def with_mode(self, mode: str) -> "GreensField":
        """Same field summed in ``"raw"`` or ``"subtracted"`` mode."""
        if mode == self.mode:
            return self
        if mode == "subtracted" and self.parametrix is None:
            raise DomainError("field has no parametrix; rebuild with mode='subtracted'")
        return GreensField(self.p, self.q, self.gluing, self.i_max, self.j_max, self.coefficients,
                           self.c_n, mode, self.parametrix, self.remainder_coefficients, self.c_eval)

    def distances(self, points) -> np.ndarray:
        """Geodesic distance in ``g_{t_*}`` from each point to each source, shape ``(N, m)``."""
        x, y = unit_blocks(points, self.p)
        ts = self.t_star
        th = np.arccos(np.clip(x @ self._xhat.T, -1.0, 1.0))
        ph = np.arccos(np.clip(y @ self._yhat.T, -1.0, 1.0))
        return np.sqrt((math.cos(ts) * th) ** 2 + (math.sin(ts) * ph) ** 2)

    @property
    def gamma_lambda(self) -> float:
        """Constant term of the ``n = 3`` expansion at the first source; 0 for ``n >= 4``.

        Exact in subtracted mode (value of the regular part at the source).
        """
        if self.n >= 4:
            return 0.0
        if self.mode != "subtracted":
            raise DomainError("exact gamma needs the subtracted representation; use local_expansion")
        mu = self.gluing.points[:1]
        return float(_regular_part(self, mu)[0])


def solve_greens(p: int, q: int, gluing: GluingSet, I_max: int, J_max: int,
                 mode: str = "subtracted", c_eval: float = DEFAULT_C_EVAL,
                 cutoff_radii: tuple[float, float] | None = None) -> GreensField:
    """Build the Green's function for the sources ``gluing.points``.

    Parameters
    ----------
    p, q : int
        Factor dimensions.
    gluing : GluingSet
        Source points on ``C_{t_*}`` (or on the unit product).
    I_max, J_max : int
        Harmonic degree caps on ``S^p`` and ``S^q``; both at least 8.
    mode : {"subtracted", "raw"}
        Default evaluation mode of the returned field.
    cutoff_radii : (float, float), optional
        Inner and outer radius of the parametrix cutoff.  Defaults to
        ``R / 8`` and ``R`` with ``R = min(0.8, 0.45 d_min)``, where ``d_min``
        is the smallest distance between sources (or the injectivity bound
        ``pi min(cos t_*, sin t_*)`` for a single source).

    Raises
    ------
    SolvabilityError
        If ``sum_mu x(mu) y(mu)^T`` does not vanish, i.e. the sources see the
        kernel of ``L``.
    """
    if mode not in ("raw", "subtracted"):
        raise DomainError(f"unknown mode {mode!r}")
    if I_max < 8 or J_max < 8:
        raise DomainError(f"degree caps must be at least 8, got ({I_max}, {J_max})")
    if gluing.p != p or gluing.q != q:
        raise DomainError("gluing set dimensions do not match (p, q)")
    n = p + q
    M = kernel_orthogonality_matrix(gluing)
    if np.max(np.abs(M)) > KERNEL_TOL * gluing.m:
        k, l = np.unravel_index(np.argmax(np.abs(M)), M.shape)
        raise SolvabilityError(
            f"sources are not orthogonal to the kernel: projection on x_{k + 1} y_{l + 1} is {M[k, l]:.3e}")
    ts = minimal_angle(p, q)
    lam = jacobi_eigenvalue_table(p, q, ts, I_max, J_max)
    lam[1, 1] = np.inf
    if np.any(np.abs(lam) < 1e-9):
        i, j = np.argwhere(np.abs(lam) < 1e-9)[0]
        raise InternalConsistencyError(f"zero eigenvalue at mode ({i}, {j})")
    c_n = sphere_volume(n - 1)
    vol = math.cos(ts) ** p * math.sin(ts) ** q
    coef = -c_n / (vol * lam)
    coef[1, 1] = 0.0

    par = None
    rem = None
    if mode == "subtracted":
        if cutoff_radii is None:
            outer = min(0.8, 0.45 * _min_source_distance(p, q, gluing),
                        0.45 * math.pi * min(math.cos(ts), math.sin(ts)))
            cutoff_radii = (0.125 * outer, outer)
        par = Parametrix(p, q, float(cutoff_radii[0]), float(cutoff_radii[1]))
        b = par.zonal_coefficients(I_max, J_max)
        rem = coef - b
        rem[1, 1] = -b[1, 1]
    return GreensField(p, q, gluing, I_max, J_max, coef, c_n, mode, par, rem, c_eval)


def _min_source_distance(p, q, gluing):
    if gluing.m < 2:
        return math.pi * min(math.cos(minimal_angle(p, q)), math.sin(minimal_angle(p, q)))
    x, y = unit_blocks(gluing.points, p)
    ts = minimal_angle(p, q)
    th = np.arccos(np.clip(x @ x.T, -1, 1))
    ph = np.arccos(np.clip(y @ y.T, -1, 1))
    d = np.sqrt((math.cos(ts) * th) ** 2 + (math.sin(ts) * ph) ** 2)
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


# --- evaluation ---------------------------------------------------------------

def _series(field: GreensField, x, y, Fx=None, Fy=None, jets=False):
    coef = field.series_coefficients()
    npts = x.shape[0]
    val = np.zeros(npts)
    grad = np.zeros((npts, field.n)) if jets else None
    hess = np.zeros((npts, field.n, field.n)) if jets else None
    p = field.p
    for xh, yh in zip(field._xhat, field._yhat):
        a = x @ xh
        b = y @ yh
        if not jets:
            zp = _kernels.zonal_table(field.p, field.i_max, a)[0]
            zq = _kernels.zonal_table(field.q, field.j_max, b)[0]
            val += _kernels.contract_values(coef, zp, zq)
            continue
        tp = _kernels.zonal_table(field.p, field.i_max, a)
        tq = _kernels.zonal_table(field.q, field.j_max, b)
        f, fa, fb, faa, fab, fbb = _kernels.contract(coef, tp, tq).T
        ga = Fx @ xh
        gb = Fy @ yh
        val += f
        grad[:, :p] += fa[:, None] * ga
        grad[:, p:] += fb[:, None] * gb
        hess[:, :p, :p] += faa[:, None, None] * ga[:, :, None] * ga[:, None, :]
        hess[:, :p, :p] -= (fa * a)[:, None, None] * np.eye(p)
        hess[:, p:, p:] += fbb[:, None, None] * gb[:, :, None] * gb[:, None, :]
        hess[:, p:, p:] -= (fb * b)[:, None, None] * np.eye(field.q)
        cross = fab[:, None, None] * ga[:, :, None] * gb[:, None, :]
        hess[:, :p, p:] += cross
        hess[:, p:, :p] += np.transpose(cross, (0, 2, 1))
    return val, grad, hess


def angle_square_jets(v, frames, center):
    """``theta^2`` with ``theta = dist(v, center)`` on the unit sphere, with
    gradient and Hessian in normal coordinates at ``v`` along ``frames``."""
    a = np.clip(v @ center, -1.0, 1.0)
    ga = frames @ center
    th = np.arccos(a)
    sn = np.sqrt(np.maximum(1.0 - a * a, 0.0))
    small = th < 1e-7
    th_over_sin = np.where(small, 1.0, th / np.where(small, 1.0, sn))
    th_cot = np.where(small, 1.0, th * a / np.where(small, 1.0, sn))
    grad = -2.0 * th_over_sin[:, None] * ga
    u = -ga / np.where(small, 1.0, sn)[:, None]
    u = np.where(small[:, None], 0.0, u)
    dim = frames.shape[1]
    uu = u[:, :, None] * u[:, None, :]
    hess = 2.0 * uu + 2.0 * th_cot[:, None, None] * (np.eye(dim) - uu)
    return th * th, grad, hess


def radial_chain(field_or_pq, derivs, dP, dQ, hP, hQ):
    """Chart jets of ``G(P, Q)`` from its ``(P, Q)`` derivatives.

    ``dP, hP`` live on the ``x`` block and ``dQ, hQ`` on the ``y`` block.
    """
    p, q = field_or_pq
    g, gp, gq, gpp, gpq, gqq = derivs
    npts = g.shape[0]
    n = p + q
    grad = np.zeros((npts, n))
    hess = np.zeros((npts, n, n))
    grad[:, :p] = gp[:, None] * dP
    grad[:, p:] = gq[:, None] * dQ
    hess[:, :p, :p] = gpp[:, None, None] * dP[:, :, None] * dP[:, None, :] + gp[:, None, None] * hP
    hess[:, p:, p:] = gqq[:, None, None] * dQ[:, :, None] * dQ[:, None, :] + gq[:, None, None] * hQ
    cross = gpq[:, None, None] * dP[:, :, None] * dQ[:, None, :]
    hess[:, :p, p:] = cross
    hess[:, p:, :p] = np.transpose(cross, (0, 2, 1))
    return g, grad, hess


def _parametrix_sum(field: GreensField, x, y, Fx=None, Fy=None, jets=False, skip=None):
    par = field.parametrix
    ts = field.t_star
    c2, s2 = math.cos(ts) ** 2, math.sin(ts) ** 2
    npts = x.shape[0]
    val = np.zeros(npts)
    grad = np.zeros((npts, field.n)) if jets else None
    hess = np.zeros((npts, field.n, field.n)) if jets else None
    for k, (xh, yh) in enumerate(zip(field._xhat, field._yhat)):
        if skip is not None and k == skip:
            continue
        if not jets:
            th = np.arccos(np.clip(x @ xh, -1.0, 1.0))
            ph = np.arccos(np.clip(y @ yh, -1.0, 1.0))
            val += par.cut_profile(c2 * th * th, s2 * ph * ph)[0]
            continue
        # jets only on the cutoff support, which stays clear of theta = pi
        th = np.arccos(np.clip(x @ xh, -1.0, 1.0))
        ph = np.arccos(np.clip(y @ yh, -1.0, 1.0))
        sel = c2 * th * th + s2 * ph * ph < par.r_outer**2
        if not np.any(sel):
            continue
        tx, dx, hx = angle_square_jets(x[sel], Fx[sel], xh)
        ty, dy, hy = angle_square_jets(y[sel], Fy[sel], yh)
        derivs = par.cut_profile(c2 * tx, s2 * ty)
        g, gr, he = radial_chain((field.p, field.q), derivs, c2 * dx, s2 * dy, c2 * hx, s2 * hy)
        val[sel] += g
        grad[sel] += gr
        hess[sel] += he
    return val, grad, hess


def _regular_part(field: GreensField, points):
    # Gamma minus the full local parametrix S of source 0, evaluated near source 0
    x, y = unit_blocks(points, field.p)
    val = _series(field, x, y)[0]
    val += _parametrix_sum(field, x, y, skip=0)[0]
    ts = field.t_star
    th = np.arccos(np.clip(x @ field._xhat[0], -1.0, 1.0))
    ph = np.arccos(np.clip(y @ field._yhat[0], -1.0, 1.0))
    P, Q = (math.cos(ts) * th) ** 2, (math.sin(ts) * ph) ** 2
    at_source = (P + Q) == 0.0
    if np.any(~at_source):
        u = P + Q
        chi = radial_cutoff(np.sqrt(u), field.parametrix.r_inner, field.parametrix.r_outer)[0]
        prof = np.zeros_like(u)
        ok = ~at_source
        prof[ok] = field.parametrix.profile(P[ok], Q[ok])[0]
        val[ok] += (chi[ok] - 1.0) * prof[ok]
    return val


def evaluate(field: GreensField, z, return_mask: bool = False):
    """Values of ``Gamma`` at points ``z`` (rows in ``R^{n+2}``; blocks are normalised).

    In raw mode, points closer than ``c_eval / min(I_max, J_max)`` to a source
    trigger an :class:`AccuracyWarning`; ``return_mask=True`` also returns the
    boolean mask of such points.
    """
    pts = np.atleast_2d(np.asarray(z, dtype=float))
    x, y = unit_blocks(pts, field.p)
    near = np.min(field.distances(pts), axis=1) < field.exclusion_radius
    if field.mode == "raw" and np.any(near):
        warnings.warn(f"{int(near.sum())} point(s) inside the exclusion radius "
                      f"{field.exclusion_radius:.3g}; truncated series is inaccurate there",
                      AccuracyWarning, stacklevel=2)
    val = _series(field, x, y)[0]
    if field.mode == "subtracted":
        val += _parametrix_sum(field, x, y)[0]
    if np.asarray(z).ndim == 1:
        val = val[0]
    return (val, near) if return_mask else val


def evaluate_jets(field: GreensField, z, frames=None):
    """Value, gradient and Hessian of ``Gamma`` in unit-sphere normal coordinates.

    Parameters
    ----------
    z : array_like, shape (N, n + 2)
    frames : tuple of arrays, optional
        Tangent frames ``(Fx, Fy)`` of shapes ``(N, p, p + 1)`` and
        ``(N, q, q + 1)``; by default :func:`tangent_frames` of each block.

    Returns
    -------
    value : (N,), grad : (N, n), hess : (N, n, n)
    """
    pts = np.atleast_2d(np.asarray(z, dtype=float))
    x, y = unit_blocks(pts, field.p)
    if frames is None:
        frames = (tangent_frames(x), tangent_frames(y))
    Fx, Fy = frames
    val, grad, hess = _series(field, x, y, Fx, Fy, jets=True)
    if field.mode == "subtracted":
        v2, g2, h2 = _parametrix_sum(field, x, y, Fx, Fy, jets=True)
        val, grad, hess = val + v2, grad + g2, hess + h2
    return val, grad, hess


# --- local expansion ----------------------------------------------------------

@dataclass(frozen=True)
class ExpansionFit:
    exponent: float
    coefficient: float
    gamma_lambda: float
    residual: float
    radii: tuple
    values: tuple


def source_chart_points(field: GreensField, source_index: int, zbar):
    """Points ``exp_mu(z_bar)`` in normal coordinates of ``g_{t_*}`` at a source."""
    zbar = np.atleast_2d(np.asarray(zbar, dtype=float))
    ts = field.t_star
    xh, yh = field._xhat[source_index], field._yhat[source_index]
    fx = tangent_frames(xh[None])[0]
    fy = tangent_frames(yh[None])[0]
    x = sphere_exp(xh, fx, zbar[:, : field.p] / math.cos(ts))
    y = sphere_exp(yh, fy, zbar[:, field.p:] / math.sin(ts))
    return np.concatenate([math.cos(ts) * x, math.sin(ts) * y], axis=1)


def local_expansion(field: GreensField, mu=0, radii=None, direction=None,
                    max_residual: float = 0.05):
    """Fit the near-source behaviour ``Gamma ~ C r^e (+ gamma)``.

    Parameters
    ----------
    mu : int
        Index of the source in ``field.gluing.points``.
    radii : sequence of float
        At least four decreasing radii.  Defaults to a geometric sequence from
        ``0.5`` down to the exclusion radius.
    direction : array_like, optional
        Unit vector in ``R^n`` along which to sample; defaults to the diagonal.

    Returns
    -------
    ExpansionFit
        For ``n = 3`` a three-term fit ``a/r + gamma + b r`` first supplies
        ``gamma``, then ``log(Gamma - gamma)`` is fitted against ``log r``.
        For ``n >= 4`` the log-log fit is applied to ``Gamma`` and
        ``gamma_lambda = 0``.

    Raises
    ------
    ExpansionFitError
        If the RMS residual of the log-log fit exceeds ``max_residual``.
    """
    n = field.n
    if radii is None:
        if field.mode == "subtracted":
            radii = np.geomspace(0.05, 0.005, 8)
        else:
            radii = np.geomspace(4.0 * field.exclusion_radius, field.exclusion_radius, 8)
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise DomainError("need at least 4 radii")
    if np.any(np.diff(radii) >= 0):
        raise DomainError("radii must be strictly decreasing")
    if direction is None:
        direction = np.ones(n) / math.sqrt(n)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    pts = source_chart_points(field, mu, radii[:, None] * direction[None, :])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        vals = np.asarray(evaluate(field, pts))
    gamma = 0.0
    target = vals
    if n == 3:
        A = np.stack([1.0 / radii, np.ones_like(radii), radii], axis=1)
        sol = np.linalg.lstsq(A, vals, rcond=None)[0]
        gamma = float(sol[1])
        target = vals - gamma
    if np.any(target <= 0):
        raise ExpansionFitError(f"non-positive values near the source: {target}")
    X = np.stack([np.log(radii), np.ones_like(radii)], axis=1)
    (e, lc), *_ = np.linalg.lstsq(X, np.log(target), rcond=None)
    resid = float(np.sqrt(np.mean((X @ np.array([e, lc]) - np.log(target)) ** 2)))
    if resid > max_residual:
        raise ExpansionFitError(f"log-log fit residual {resid:.3g} exceeds {max_residual}; "
                                f"radii={radii.tolist()}, values={vals.tolist()}")
    return ExpansionFit(float(e), float(math.exp(lc)), gamma, resid, tuple(radii), tuple(vals))


# --- checks -------------------------------------------------------------------

def _harmonic(v, degree):
    # Re (v_0 + i v_1)^degree: a degree-k harmonic polynomial on any R^{d+1}
    return np.real((v[:, 0] + 1j * v[:, 1]) ** degree)


def invariant_test_function(field: GreensField, degrees=((0, 0), (2, 0), (0, 2), (2, 2))):
    """Group-averaged products of harmonics; returns ``(w, Lw)`` callables on unit blocks."""
    group = field.gluing.group
    elements = list(group.elements) if group is not None else []
    ts = field.t_star
    lam = jacobi_eigenvalue_table(field.p, field.q, ts, 2, 2)

    def parts(x, y):
        out = []
        for i, j in degrees:
            if elements:
                acc = np.zeros(x.shape[0])
                for g in elements:
                    acc += _harmonic(x @ g.sigma_p.T, i) * _harmonic(y @ g.sigma_q.T, j)
                out.append(acc / len(elements))
            else:
                out.append(_harmonic(x, i) * _harmonic(y, j))
        return out

    def w(x, y):
        return sum(parts(x, y))

    def lw(x, y):
        return sum(lam[i, j] * f for (i, j), f in zip(degrees, parts(x, y)))

    return w, lw


def pairing_identity(field: GreensField, degrees=((0, 0), (2, 0), (0, 2), (2, 2)),
                     resolution: int = 96):
    """Quadrature check of ``<Gamma, L w> = -c_n sum_mu w(mu)``.

    Returns ``(lhs, rhs, relative_error)``.  The product grid uses
    ``resolution`` azimuthal nodes per sphere factor, shifted off the sources.
    """
    p, q = field.p, field.q
    nx, wx = sphere_quadrature(p, max(resolution // 2, 8), resolution, offset=0.5)
    ny, wy = sphere_quadrature(q, max(resolution // 2, 8), resolution, offset=0.5)
    w, lw = invariant_test_function(field, degrees)
    ts = field.t_star
    vol = math.cos(ts) ** p * math.sin(ts) ** q
    X = np.repeat(nx, len(ny), axis=0)
    Y = np.tile(ny, (len(nx), 1))
    W = np.outer(wx, wy).ravel() * vol
    lhs = 0.0
    chunk = 200000
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        for start in range(0, len(W), chunk):
            sl = slice(start, start + chunk)
            pts = np.concatenate([X[sl], Y[sl]], axis=1)
            lhs += float(np.sum(W[sl] * evaluate(field, pts) * lw(X[sl], Y[sl])))
    rhs = -field.c_n * float(np.sum(w(field._xhat, field._yhat)))
    return lhs, rhs, abs(lhs - rhs) / abs(rhs)


def truncation_differences(p, q, gluing, caps, sample, mode="raw"):
    """``sup |Gamma^{(cap_k)} - Gamma^{(cap_{k-1})}|`` over ``sample`` for consecutive caps."""
    vals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        for cap in caps:
            vals.append(np.asarray(evaluate(solve_greens(p, q, gluing, cap, cap, mode=mode), sample)))
    return [float(np.max(np.abs(b - a))) for a, b in zip(vals, vals[1:])]


# --- serialization ------------------------------------------------------------

def to_json(field: GreensField) -> dict:
    """Versioned JSON tree of the mode tables and source points."""
    out = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "p": field.p,
        "q": field.q,
        "i_max": field.i_max,
        "j_max": field.j_max,
        "c_n": field.c_n,
        "c_eval": field.c_eval,
        "mode": field.mode,
        "points": field.gluing.points.tolist(),
        "coefficients": field.coefficients.tolist(),
    }
    if field.parametrix is not None:
        out["parametrix"] = {"r_inner": field.parametrix.r_inner, "r_outer": field.parametrix.r_outer}
        out["remainder_coefficients"] = field.remainder_coefficients.tolist()
    return out


def from_json(data: dict, group=None) -> GreensField:
    if data.get("format") != FORMAT_NAME:
        raise DomainError(f"not a serialized Green's field: format={data.get('format')!r}")
    if data.get("version") != FORMAT_VERSION:
        raise DomainError(f"unsupported version {data.get('version')!r}")
    p, q = int(data["p"]), int(data["q"])
    gl = GluingSet(p, q, np.asarray(data["points"], dtype=float), group)
    par = None
    rem = None
    if "parametrix" in data:
        par = Parametrix(p, q, float(data["parametrix"]["r_inner"]), float(data["parametrix"]["r_outer"]))
        rem = np.asarray(data["remainder_coefficients"], dtype=float)
    return GreensField(p, q, gl, int(data["i_max"]), int(data["j_max"]),
                       np.asarray(data["coefficients"], dtype=float), float(data["c_n"]),
                       data.get("mode", "raw"), par, rem, float(data.get("c_eval", DEFAULT_C_EVAL)))
