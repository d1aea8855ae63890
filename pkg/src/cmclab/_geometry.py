"""Small helpers for charts on unit spheres and products of spheres."""

import numpy as np


def tangent_frame(v):
    """Orthonormal basis of ``v^perp`` as the rows of a ``(d, d + 1)`` array.

    Deterministic: Householder reflection taking ``e_0`` to ``v`` applied to
    ``e_1, ..., e_d``.
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    dim = v.shape[0]
    e0 = np.zeros(dim)
    e0[0] = 1.0
    w = e0 - v
    nw = np.linalg.norm(w)
    eye = np.eye(dim)
    if nw < 1e-14:
        return eye[1:]
    w /= nw
    house = eye - 2.0 * np.outer(w, w)
    return house[1:]


def tangent_frames(vs):
    """Batched :func:`tangent_frame`: ``(N, d + 1)`` unit vectors to ``(N, d, d + 1)`` frames."""
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    vs = vs / np.linalg.norm(vs, axis=1, keepdims=True)
    npts, dim = vs.shape
    w = -vs.copy()
    w[:, 0] += 1.0
    nw = np.linalg.norm(w, axis=1, keepdims=True)
    flat = nw[:, 0] < 1e-14
    w = np.where(flat[:, None], 0.0, w / np.where(flat[:, None], 1.0, nw))
    eye = np.broadcast_to(np.eye(dim)[1:], (npts, dim - 1, dim))
    return eye - 2.0 * w[:, 1:, None] * w[:, None, :]


def sphere_exp(base, frame, vec):
    """Exponential map of the unit sphere at ``base`` applied to ``frame.T @ vec``.

    ``vec`` may be a single tangent vector or a stack of them (last axis).
    """
    vec = np.asarray(vec, dtype=float)
    amb = vec @ frame
    nrm = np.linalg.norm(amb, axis=-1, keepdims=True)
    safe = np.where(nrm > 0, nrm, 1.0)
    sinc = np.where(nrm > 0, np.sin(nrm) / safe, 1.0)
    return np.cos(nrm) * base + sinc * amb


def unit_blocks(points, p):
    """Split points of ``R^{p+q+2}`` into unit vectors on ``S^p`` and ``S^q``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x = pts[:, : p + 1]
    y = pts[:, p + 1:]
    return x / np.linalg.norm(x, axis=1, keepdims=True), y / np.linalg.norm(y, axis=1, keepdims=True)


def sphere_quadrature(d, n_polar, n_azimuth, offset=0.5):
    """Product quadrature on the unit ``S^d`` exact for low-degree polynomials.

    Returns ``(nodes, weights)`` with nodes of shape ``(N, d + 1)``.  The
    circle uses ``n_azimuth`` equispaced nodes shifted by ``offset`` steps;
    each higher polar angle uses Gauss-Jacobi nodes in its cosine.
    """
    from scipy.special import roots_jacobi

    k = np.arange(n_azimuth)
    ang = 2.0 * np.pi * (k + offset) / n_azimuth
    nodes = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    weights = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
    for dim in range(2, d + 1):
        a = 0.5 * (dim - 2)
        xs, ws = roots_jacobi(n_polar, a, a)
        sn = np.sqrt(1.0 - xs * xs)
        nodes = np.concatenate([
            np.repeat(xs, len(weights))[:, None],
            (sn[:, None, None] * nodes[None, :, :]).reshape(-1, dim),
        ], axis=1)
        weights = (ws[:, None] * weights[None, :]).ravel()
    return nodes, weights
