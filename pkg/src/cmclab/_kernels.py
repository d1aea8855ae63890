"""Numeric kernels for zonal spherical-harmonic series.

Each kernel has a loop version compiled by numba and a vectorised numpy
version.  ``zonal_table`` and ``contract`` dispatch on
:func:`cmclab._accel.use_numba`.
"""

import math

import numpy as np

from ._accel import njit, use_numba


def sphere_area(d):
    """Area of the unit ``S^d``."""
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


# --- numba loops --------------------------------------------------------------

@njit
def _gegenbauer_row(beta, tau, kmax, out):
    # C^beta_k(tau) for k = 0..kmax
    if kmax < 0:
        return
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 2.0 * beta * tau
    for k in range(2, kmax + 1):
        out[k] = (2.0 * tau * (k + beta - 1.0) * out[k - 1] - (k + 2.0 * beta - 2.0) * out[k - 2]) / k


@njit
def _zonal_table_loop(d, deg, tau, norm, q0, q1, q2):
    alpha = 0.5 * (d - 1)
    npts = tau.shape[0]
    c0 = np.empty(deg + 1)
    c1 = np.empty(deg + 1)
    c2 = np.empty(deg + 1)
    for m in range(npts):
        t = tau[m]
        if d == 1:
            # Chebyshev T_k, with T_k' = k U_{k-1}, T_k'' = 2k C^2_{k-2}
            c0[0] = 1.0
            if deg >= 1:
                c0[1] = t
            for k in range(2, deg + 1):
                c0[k] = 2.0 * t * c0[k - 1] - c0[k - 2]
            _gegenbauer_row(1.0, t, deg - 1, c1)
            _gegenbauer_row(2.0, t, deg - 2, c2)
            for k in range(deg + 1):
                q0[m, k] = norm[k] * c0[k]
                q1[m, k] = norm[k] * k * c1[k - 1] if k >= 1 else 0.0
                q2[m, k] = norm[k] * 2.0 * k * c2[k - 2] if k >= 2 else 0.0
        else:
            _gegenbauer_row(alpha, t, deg, c0)
            _gegenbauer_row(alpha + 1.0, t, deg - 1, c1)
            _gegenbauer_row(alpha + 2.0, t, deg - 2, c2)
            for k in range(deg + 1):
                q0[m, k] = norm[k] * c0[k]
                q1[m, k] = norm[k] * 2.0 * alpha * c1[k - 1] if k >= 1 else 0.0
                q2[m, k] = norm[k] * 4.0 * alpha * (alpha + 1.0) * c2[k - 2] if k >= 2 else 0.0


@njit
def _reduce_loop(a0, a1, a2, r0, r1, r2):
    # fused row-wise dot products of the BLAS partial sums with the q-tables
    npts, nj = r0.shape
    out = np.zeros((npts, 6))
    for m in range(npts):
        f = fa = fb = faa = fab = fbb = 0.0
        for j in range(nj):
            f += a0[m, j] * r0[m, j]
            fa += a1[m, j] * r0[m, j]
            fb += a0[m, j] * r1[m, j]
            faa += a2[m, j] * r0[m, j]
            fab += a1[m, j] * r1[m, j]
            fbb += a0[m, j] * r2[m, j]
        out[m, 0] = f
        out[m, 1] = fa
        out[m, 2] = fb
        out[m, 3] = faa
        out[m, 4] = fab
        out[m, 5] = fbb
    return out


# --- numpy fallbacks ----------------------------------------------------------

def _gegenbauer_rows_np(beta, tau, kmax):
    out = np.zeros((tau.shape[0], max(kmax + 1, 0)))
    if kmax < 0:
        return out
    out[:, 0] = 1.0
    if kmax >= 1:
        out[:, 1] = 2.0 * beta * tau
    for k in range(2, kmax + 1):
        out[:, k] = (2.0 * tau * (k + beta - 1.0) * out[:, k - 1] - (k + 2.0 * beta - 2.0) * out[:, k - 2]) / k
    return out


def _zonal_table_np(d, deg, tau, norm):
    npts = tau.shape[0]
    k = np.arange(deg + 1)
    q0 = np.zeros((npts, deg + 1))
    q1 = np.zeros_like(q0)
    q2 = np.zeros_like(q0)
    if d == 1:
        c0 = np.zeros((npts, deg + 1))
        c0[:, 0] = 1.0
        if deg >= 1:
            c0[:, 1] = tau
        for m in range(2, deg + 1):
            c0[:, m] = 2.0 * tau * c0[:, m - 1] - c0[:, m - 2]
        c1 = _gegenbauer_rows_np(1.0, tau, deg - 1)
        c2 = _gegenbauer_rows_np(2.0, tau, deg - 2)
        q0[:] = norm * c0
        if deg >= 1:
            q1[:, 1:] = norm[1:] * k[1:] * c1
        if deg >= 2:
            q2[:, 2:] = norm[2:] * 2.0 * k[2:] * c2
    else:
        alpha = 0.5 * (d - 1)
        q0[:] = norm * _gegenbauer_rows_np(alpha, tau, deg)
        if deg >= 1:
            q1[:, 1:] = norm[1:] * 2.0 * alpha * _gegenbauer_rows_np(alpha + 1.0, tau, deg - 1)
        if deg >= 2:
            q2[:, 2:] = norm[2:] * 4.0 * alpha * (alpha + 1.0) * _gegenbauer_rows_np(alpha + 2.0, tau, deg - 2)
    return q0, q1, q2


def _contract_np(coef, p0, p1, p2, r0, r1, r2):
    a0 = p0 @ coef
    a1 = p1 @ coef
    a2 = p2 @ coef
    return np.stack([
        np.einsum("mj,mj->m", a0, r0),
        np.einsum("mj,mj->m", a1, r0),
        np.einsum("mj,mj->m", a0, r1),
        np.einsum("mj,mj->m", a2, r0),
        np.einsum("mj,mj->m", a1, r1),
        np.einsum("mj,mj->m", a0, r2),
    ], axis=1)


# --- public dispatch ----------------------------------------------------------

def zonal_norms(d, deg):
    """Factors turning ``C^{(d-1)/2}_k`` (or ``T_k`` on the circle) into the
    reproducing kernel of degree-``k`` harmonics on the unit ``S^d``."""
    k = np.arange(deg + 1, dtype=float)
    area = sphere_area(d)
    if d == 1:
        out = np.full(deg + 1, 2.0 / area)
        out[0] = 1.0 / area
        return out
    return (2.0 * k + d - 1.0) / (d - 1.0) / area


def zonal_table(d, deg, tau):
    """Reproducing kernels ``Z_k(tau)`` and their first two ``tau``-derivatives.

    Returns three arrays of shape ``(len(tau), deg + 1)``.
    """
    tau = np.ascontiguousarray(np.clip(np.asarray(tau, dtype=float).ravel(), -1.0, 1.0))
    norm = zonal_norms(d, deg)
    if use_numba():
        npts = tau.shape[0]
        q0 = np.empty((npts, deg + 1))
        q1 = np.empty_like(q0)
        q2 = np.empty_like(q0)
        _zonal_table_loop(int(d), int(deg), tau, norm, q0, q1, q2)
        return q0, q1, q2
    return _zonal_table_np(d, deg, tau, norm)


def contract(coef, ptab, qtab):
    """Sum ``coef[i, j] Z_i(a) Z_j(b)`` with derivatives in ``(a, b)``.

    Returns an ``(npts, 6)`` array of ``F, F_a, F_b, F_aa, F_ab, F_bb``.
    """
    coef = np.ascontiguousarray(coef, dtype=float)
    if use_numba():
        # the matrix products stay on BLAS; numba fuses the six reductions
        p0, p1, p2 = ptab
        return _reduce_loop(p0 @ coef, p1 @ coef, p2 @ coef, *qtab)
    return _contract_np(coef, *ptab, *qtab)


def contract_values(coef, p0, q0):
    """Value-only contraction ``sum coef[i, j] P[m, i] Q[m, j]`` (BLAS path)."""
    return np.einsum("mj,mj->m", p0 @ coef, q0)
