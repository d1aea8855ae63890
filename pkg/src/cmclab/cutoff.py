"""Smooth step functions built from ``exp(-1/x)``."""

import numpy as np


def _f(x):
    # exp(-1/x) for x > 0, else 0, with its first two derivatives
    x = np.asarray(x, dtype=float)
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    f = np.where(pos, np.exp(-1.0 / xs), 0.0)
    f1 = f / xs**2
    f2 = f * (1.0 / xs**4 - 2.0 / xs**3)
    return f, np.where(pos, f1, 0.0), np.where(pos, f2, 0.0)


def smooth_step(x):
    """``h(x)``: 0 for ``x <= 0``, 1 for ``x >= 1``, smooth in between.

    Returns ``(h, h', h'')``.
    """
    x = np.asarray(x, dtype=float)
    a, a1, a2 = _f(x)
    b, b1, b2 = _f(1.0 - x)
    # d/dx of f(1 - x) flips the sign of the first derivative
    b1 = -b1
    d = a + b
    d1 = a1 + b1
    d2 = a2 + b2
    h = a / d
    h1 = (a1 * d - a * d1) / d**2
    h2 = (a2 * d - a * d2) / d**2 - 2.0 * d1 * (a1 * d - a * d1) / d**3
    return h, h1, h2


def radial_cutoff(r, inner, outer):
    """``chi(r)``: 1 on ``[0, inner]``, 0 beyond ``outer``; returns ``(chi, chi', chi'')``."""
    w = outer - inner
    h, h1, h2 = smooth_step((np.asarray(r, dtype=float) - inner) / w)
    return 1.0 - h, -h1 / w, -h2 / w**2


def eta(rho):
    """Transition cutoff: 0 for ``rho <= 1/2``, 1 for ``rho >= 2``; returns value and two derivatives."""
    h, h1, h2 = smooth_step((np.asarray(rho, dtype=float) - 0.5) / 1.5)
    return h, h1 / 1.5, h2 / 2.25
