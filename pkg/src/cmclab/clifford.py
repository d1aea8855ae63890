"""Geometry and Jacobi spectrum of the generalized Clifford hypersurfaces.

``C_t = S^p(cos t) x S^q(sin t)`` sits in ``S^{n+1}``, ``n = p + q``.  Its
mean curvature is ``q cot t - p tan t`` and it is minimal at the angle
``t_*`` with ``tan^2 t_* = q / p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def _check_pq(p: int, q: int) -> None:
    if int(p) != p or int(q) != q or p < 1 or q < 1:
        raise DomainError(f"p and q must be positive integers, got p={p}, q={q}")


def minimal_angle(p: int, q: int) -> float:
    """Angle ``t_* = arctan(sqrt(q/p))`` of the minimal member of the family."""
    _check_pq(p, q)
    return math.atan(math.sqrt(q / p))


@dataclass(frozen=True)
class CliffordSlice:
    """The hypersurface ``S^p(cos t) x S^q(sin t)`` of ``S^{n+1}``."""

    p: int
    q: int
    t: float

    def __post_init__(self):
        _check_pq(self.p, self.q)
        if self.p + self.q < 3:
            raise DomainError(f"n = p + q must be at least 3, got {self.p + self.q}")
        if not 0.0 < self.t < 0.5 * math.pi:
            raise DomainError(f"t must lie in (0, pi/2), got {self.t}")

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def t_star(self) -> float:
        return minimal_angle(self.p, self.q)

    @classmethod
    def minimal(cls, p: int, q: int) -> "CliffordSlice":
        return cls(p, q, minimal_angle(p, q))

    def metric_scales(self) -> tuple[float, float]:
        """Factors ``(cos^2 t, sin^2 t)`` of the induced product metric."""
        return math.cos(self.t) ** 2, math.sin(self.t) ** 2

    def volume_factor(self) -> float:
        """Volume element relative to the unit product ``S^p x S^q``."""
        return math.cos(self.t) ** self.p * math.sin(self.t) ** self.q


@dataclass(frozen=True)
class ModeIndex:
    """Harmonic degrees ``(i, j)`` on ``S^p`` and ``S^q``."""

    i: int
    j: int

    def __post_init__(self):
        if self.i < 0 or self.j < 0:
            raise DomainError(f"mode degrees must be nonnegative, got ({self.i}, {self.j})")


def mean_curvature_at(p: int, q: int, t: float) -> float:
    """``q cot t - p tan t`` without constructing a slice (used by root finders)."""
    return q / math.tan(t) - p * math.tan(t)


def slice_mean_curvature(slice: CliffordSlice) -> float:
    return mean_curvature_at(slice.p, slice.q, slice.t)


def principal_curvature_data(slice: CliffordSlice) -> tuple[float, float, float]:
    """Principal curvatures on the two factors and the squared norm of ``B``.

    Returns ``(-tan t, cot t, p tan^2 t + q cot^2 t)``; the first has
    multiplicity ``p`` and the second multiplicity ``q``.
    """
    tan_t = math.tan(slice.t)
    cot_t = 1.0 / tan_t
    return -tan_t, cot_t, slice.p * tan_t**2 + slice.q * cot_t**2


def sphere_laplace_eigenvalue(dim: int, degree: int) -> float:
    """Eigenvalue ``-k(k + N - 1)`` of the Laplacian on the unit ``S^N``."""
    return -float(degree * (degree + dim - 1))


def jacobi_eigenvalue(slice: CliffordSlice, mode: ModeIndex) -> float:
    """Eigenvalue of the Jacobi operator of ``C_t`` on the ``(i, j)`` mode."""
    p, q, i, j = slice.p, slice.q, mode.i, mode.j
    c2, s2 = slice.metric_scales()
    return -(i * i + i * (p - 1) - p) / c2 - (j * j + j * (q - 1) - q) / s2


def mode_eigenvalue(p: int, q: int, t: float, i: int, j: int) -> float:
    """Jacobi eigenvalue of ``S^p(cos t) x S^q(sin t)`` without the ``n >= 3`` restriction.

    Used where the ``p = q = 1`` torus serves as a check case.
    """
    _check_pq(p, q)
    if not 0.0 < t < 0.5 * math.pi:
        raise DomainError(f"t must lie in (0, pi/2), got {t}")
    return -(i * i + i * (p - 1) - p) / math.cos(t) ** 2 - (j * j + j * (q - 1) - q) / math.sin(t) ** 2


def jacobi_eigenvalue_via_laplacian(slice: CliffordSlice, mode: ModeIndex) -> float:
    """Same eigenvalue assembled as Laplacian part ``+ |B|^2 + n``."""
    c2, s2 = slice.metric_scales()
    lap = (sphere_laplace_eigenvalue(slice.p, mode.i) / c2
           + sphere_laplace_eigenvalue(slice.q, mode.j) / s2)
    return lap + principal_curvature_data(slice)[2] + slice.n


def jacobi_eigenvalue_table(p: int, q: int, t: float, i_max: int, j_max: int):
    """Array ``lam[i, j]`` of Jacobi eigenvalues for ``0 <= i <= i_max``, ``0 <= j <= j_max``."""
    import numpy as np

    sl = CliffordSlice(p, q, t)
    c2, s2 = sl.metric_scales()
    i = np.arange(i_max + 1, dtype=float)[:, None]
    j = np.arange(j_max + 1, dtype=float)[None, :]
    return -(i * i + i * (p - 1) - p) / c2 - (j * j + j * (q - 1) - q) / s2


def kernel_description(p: int, q: int) -> tuple[int, list[tuple[int, int]]]:
    """Kernel of the Jacobi operator of ``C_{t_*}``: the bilinear monomials ``x_k y_l``."""
    _check_pq(p, q)
    labels = [(k, l) for k in range(1, p + 2) for l in range(1, q + 2)]
    return len(labels), labels
