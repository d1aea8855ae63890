"""The generalized catenoid ``K`` in ``R^{n+1}`` and its Jacobi modes.

``K`` is the hypersurface of revolution ``(s, Theta) -> (phi(s) Theta, psi(s))``
with ``phi(s) = cosh((n-1)s)^{1/(n-1)}`` and ``psi' = phi^{2-n}``, ``psi(0) = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .clifford import DomainError


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


def _check_n(n: int) -> None:
    if int(n) != n or n < 3:
        raise DomainError(f"catenoid dimension n must be an integer >= 3, got {n}")


def phi(n: int, s):
    """Radial profile ``cosh((n-1)s)^{1/(n-1)}``; accepts scalars or arrays."""
    a = n - 1
    s = np.asarray(s, dtype=float)
    x = a * np.abs(s)
    # log cosh x = x + log1p(exp(-2x)) - log 2 avoids overflow for large |s|
    logc = x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)
    out = np.exp(logc / a)
    return float(out) if out.ndim == 0 else out


def log_phi_derivative(n: int, s):
    """``d/ds log phi = tanh((n-1)s)``."""
    out = np.tanh((n - 1) * np.asarray(s, dtype=float))
    return float(out) if out.ndim == 0 else out


def phi_derivatives(n: int, s):
    """``(phi, phi', phi'')`` evaluated analytically."""
    a = n - 1
    f = phi(n, s)
    tanh = np.tanh(a * np.asarray(s, dtype=float))
    sech2 = 1.0 - tanh**2
    d1 = f * tanh
    d2 = d1 * tanh + f * a * sech2
    return f, d1, d2


def _integrand(s: float, n: int) -> float:
    return phi(n, s) ** (2 - n)


@dataclass
class CatenoidProfile:
    """Profile functions of the ``n``-dimensional catenoid.

    ``psi`` is computed by adaptive Gauss-Kronrod quadrature (QUADPACK) to
    ``quadrature_tolerance``; results are memoised per abscissa.
    """

    n: int
    quadrature_tolerance: float = 1e-13
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _check_n(self.n)
        if self.quadrature_tolerance <= 0:
            raise DomainError("quadrature_tolerance must be positive")

    def phi(self, s):
        return phi(self.n, s)

    def psi(self, s: float) -> float:
        s = float(s)
        if s == 0.0:
            return 0.0
        if s < 0.0:
            return -self.psi(-s)
        hit = self._cache.get(s)
        if hit is not None:
            return hit
        val = _quad(self.n, 0.0, s, self.quadrature_tolerance)
        if len(self._cache) < 200_000:
            self._cache[s] = val
        return val

    def psi_array(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.vectorize(self.psi, otypes=[float])(s)

    def psi_limit(self) -> float:
        """``lim_{s -> inf} psi(s)``, half of :func:`neck_height_integral`."""
        return 0.5 * neck_height_integral(self.n, self.quadrature_tolerance)

    def s_of_radius(self, rho: float, eps: float) -> float:
        """Positive root of ``eps * phi(s) = rho`` (requires ``rho >= eps``)."""
        return s_of_radius(self.n, rho, eps)


def _quad(n: int, a: float, b: float, tol: float) -> float:
    with warnings.catch_warnings():
        # QUADPACK flags roundoff near 1e-14; the returned error estimate is checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(_integrand, a, b, args=(n,), epsabs=tol, epsrel=tol, limit=200)
    if not err <= max(tol, 1e3 * np.finfo(float).eps * abs(val)):
        raise QuadratureError(f"psi quadrature on [{a}, {b}] reached only {err:.3e} (tol {tol:.1e})")
    return val


def profile(n: int, s: float, quadrature_tolerance: float = 1e-13) -> tuple[float, float]:
    """``(phi(s), psi(s))`` for the ``n``-dimensional catenoid."""
    return phi(n, s), _profile(n, quadrature_tolerance).psi(s)


@lru_cache(maxsize=32)
def _profile(n: int, tol: float) -> CatenoidProfile:
    return CatenoidProfile(n, tol)


def tail_bound(n: int, s: float) -> float:
    """Upper bound for ``int_s^inf phi^{2-n}``: ``phi^{2-n} <= 2^{(n-2)/(n-1)} e^{-(n-2)s}``."""
    return 2.0 ** ((n - 2) / (n - 1)) * math.exp(-(n - 2) * s) / (n - 2)


@lru_cache(maxsize=64)
def neck_height_integral(n: int, quadrature_tolerance: float = 1e-13) -> float:
    """``int_R phi^{2-n} ds``, the height of the unit catenoid."""
    _check_n(n)
    tol = quadrature_tolerance
    # truncate where the integrand drops below tol/10, then add the tail estimate
    c = 2.0 ** ((n - 2) / (n - 1))
    s_cut = max(1.0, math.log(10.0 * c / tol) / (n - 2))
    body = _quad(n, 0.0, s_cut, tol)
    # phi^{2-n} = c e^{-(n-2)s} (1 + e^{-2(n-1)s})^{-(n-2)/(n-1)}; the bracket is 1 to roundoff here
    tail = c * math.exp(-(n - 2) * s_cut) / (n - 2)
    return 2.0 * (body + tail)


def s_of_radius(n: int, rho: float, eps: float) -> float:
    """Solve ``eps * phi(s) = rho`` for ``s >= 0`` by Newton from the asymptotic seed."""
    ratio = rho / eps
    if ratio < 1.0:
        raise DomainError(f"radius {rho} is inside the neck waist eps={eps}")
    if ratio == 1.0:
        return 0.0
    a = n - 1
    # phi^{a} = cosh(a s) exactly, so s = arccosh(ratio^a)/a; Newton polishes roundoff
    s = math.acosh(ratio**a) / a if ratio**a < 1e300 else (math.log(2.0) / a + math.log(ratio))
    for _ in range(4):
        f, d1, _ = phi_derivatives(n, s)
        if d1 == 0.0:
            break
        s -= (f - ratio) / d1
    return s


def surface_of_revolution_mean_curvature(n, r, r1, r2, h1, h2):
    """Mean curvature of ``(r(s) Theta, h(s))`` with ``Theta`` in ``S^{n-1}``.

    Normal ``(h' Theta, -r')/|gamma'|``; a catenoid gives zero.
    """
    speed = math.hypot(r1, h1)
    return (r1 * h2 - h1 * r2) / speed**3 + (n - 1) * h1 / (r * speed)


def catenoid_mean_curvature_residual(n: int, s: float, fd_step: float) -> float:
    """``|H|`` of the catenoid at ``s`` with profile derivatives by central differences."""
    _check_n(n)
    if fd_step <= 0:
        raise DomainError("fd_step must be positive")
    prof = _profile(n, 1e-14)
    h = fd_step
    r = [phi(n, s - h), phi(n, s), phi(n, s + h)]
    z = [prof.psi(s - h), prof.psi(s), prof.psi(s + h)]
    r1, r2 = (r[2] - r[0]) / (2 * h), (r[2] - 2 * r[1] + r[0]) / h**2
    h1, h2 = (z[2] - z[0]) / (2 * h), (z[2] - 2 * z[1] + z[0]) / h**2
    return abs(surface_of_revolution_mean_curvature(n, r[1], r1, r2, h1, h2))


# --- Jacobi fields -----------------------------------------------------------

JACOBI_FIELDS = ("translation_vertical", "dilation", "translation_horizontal")


class UsageError(ValueError):
    pass


def jacobi_field(n: int, name: str, s):
    """Explicit Jacobi field of ``K`` and the spherical degree it lives on.

    ``translation_vertical``: ``d_s log phi`` (degree 0);
    ``dilation``: ``psi d_s log phi - phi^{2-n}`` (degree 0);
    ``translation_horizontal``: ``phi^{1-n}`` (degree 1).
    """
    s = np.asarray(s, dtype=float)
    if name == "translation_vertical":
        return log_phi_derivative(n, s), 0
    if name == "dilation":
        prof = _profile(n, 1e-14)
        return prof.psi_array(s) * np.tanh((n - 1) * s) - phi(n, s) ** (2 - n), 0
    if name == "translation_horizontal":
        return phi(n, s) ** (1 - n), 1
    raise UsageError(f"unknown Jacobi field {name!r}; expected one of {JACOBI_FIELDS}")


def mode_operator(n: int, j: int, f, s, h: float):
    """``L_K`` restricted to spherical degree ``j``, by conservative central differences.

    ``f`` is a callable; returns ``phi^{-n}(phi^{n-2} f')' - j(n-2+j) phi^{-2} f + n(n-1) phi^{-2n} f``.
    """
    s = np.asarray(s, dtype=float)
    fm, f0, fp = f(s - h), f(s), f(s + h)
    wp = phi(n, s + 0.5 * h) ** (n - 2)
    wm = phi(n, s - 0.5 * h) ** (n - 2)
    ph = phi(n, s)
    div = (wp * (fp - f0) - wm * (f0 - fm)) / h**2
    return ph ** (-n) * div - j * (n - 2 + j) * ph ** (-2.0) * f0 + n * (n - 1) * ph ** (-2.0 * n) * f0


def jacobi_residual(n: int, field_name: str, s_range=(-3.0, 3.0), fd_step: float = 1e-3,
                    samples: int = 241) -> float:
    """Max ``|L_K f|`` of a named explicit Jacobi field over ``s_range``."""
    _check_n(n)
    if field_name not in JACOBI_FIELDS:
        raise UsageError(f"unknown Jacobi field {field_name!r}; expected one of {JACOBI_FIELDS}")
    if fd_step <= 0:
        raise DomainError("fd_step must be positive")
    _, j = jacobi_field(n, field_name, 0.0)
    s = np.linspace(s_range[0], s_range[1], samples)
    res = mode_operator(n, j, lambda x: jacobi_field(n, field_name, x)[0], s, fd_step)
    return float(np.max(np.abs(res)))


def weighted_wronskian(n: int, s):
    """``phi^{n-2} (f1 f2' - f1' f2)`` for the two degree-0 fields; constant ``n - 1``."""
    s = np.asarray(s, dtype=float)
    a = n - 1
    ph = phi(n, s)
    th = np.tanh(a * s)
    dth = a * (1.0 - th**2)
    ps = _profile(n, 1e-14).psi_array(s)
    f1, df1 = th, dth
    f2 = ps * th - ph ** (2 - n)
    df2 = ph ** (2 - n) * th + ps * dth + (n - 2) * ph ** (2 - n) * th
    return ph ** (n - 2) * (f1 * df2 - df1 * f2)


# --- bounded-mode shooting --------------------------------------------------

@dataclass(frozen=True)
class ModeVerdict:
    verdict: str
    growth_exponent: float
    decay_exponent: float
    expected_growth: float
    grid: np.ndarray = field(repr=False)
    log_amplitude: np.ndarray = field(repr=False)


def mode_exponents(n: int, j: int) -> tuple[float, float]:
    """Indicial exponents of the degree-``j`` mode ODE at ``+inf``: ``(j, -(n-2+j))``.

    Far out ``phi'/phi -> 1`` and the potential ``n(n-1) phi^{-2n}`` is negligible,
    so ``u'' + (n-2) u' - j(n-2+j) u = 0`` with roots ``j`` and ``-(n-2+j)``.
    By ``s -> -s`` the solution decaying at ``-inf`` behaves like ``e^{(n-2+j)s}``.
    """
    return float(j), -float(n - 2 + j)


def _mode_rhs(s, y, n, j):
    a = n - 1
    th = math.tanh(a * s)
    pot = j * (n - 2 + j) - n * (n - 1) * phi(n, s) ** (-2.0 * a)
    u, du = y
    return [du, -(n - 2) * th * du + pot * u]


def integrate_mode(n: int, j: int, s_max: float, segment: float = 0.5):
    """Integrate the degree-``j`` mode from ``-s_max`` with the decaying data.

    The linear system is renormalised after every segment; returns the grid
    and ``log|u|`` on it.
    """
    decay = float(n - 2 + j)
    y = np.array([1.0, decay])
    log_scale = 0.0
    grid, logs = [-s_max], [0.0]
    edges = np.arange(-s_max, s_max + 1e-12, segment)
    if edges[-1] < s_max:
        edges = np.append(edges, s_max)
    for a, b in zip(edges[:-1], edges[1:]):
        pts = np.linspace(a, b, 9)
        sol = integrate.solve_ivp(_mode_rhs, (a, b), y, method="DOP853", t_eval=pts,
                                  args=(n, j), rtol=1e-11, atol=1e-14)
        if not sol.success:
            raise ArithmeticError(sol.message)
        with np.errstate(divide="ignore"):
            logs.extend(log_scale + np.log(np.abs(sol.y[0, 1:])))
        grid.extend(pts[1:])
        y = sol.y[:, -1]
        norm = float(np.hypot(*y))
        y = y / norm
        log_scale += math.log(norm)
    return np.asarray(grid), np.asarray(logs)


def bounded_mode_verdict(n: int, j: int, delta: float, s_max: float = 8.0,
                         fit_tolerance: float = 0.1) -> ModeVerdict:
    """Decide whether a degree-``j`` mode can be a Jacobi field bounded by ``cosh^delta``.

    Shoots the solution that decays at ``-inf`` (the only candidate) and fits
    the slope of ``log|u|`` on the last quarter of ``[-s_max, s_max]``.  A slope of
    at least ``j (1 - fit_tolerance) > 0 > delta`` means that candidate blows up,
    so no nontrivial bounded solution exists.
    """
    _check_n(n)
    if j < 2:
        raise DomainError("j must be >= 2 (degree 1 carries the bounded field phi^{1-n})")
    if not delta < 0:
        raise DomainError("delta must be negative")
    grid, logs = integrate_mode(n, j, s_max)
    expected, _ = mode_exponents(n, j)
    lo = s_max / 2.0
    tail = (grid >= lo) & np.isfinite(logs)
    head = (grid <= -lo) & np.isfinite(logs)
    try:
        growth = float(np.polyfit(grid[tail], logs[tail], 1)[0])
        decay = float(np.polyfit(grid[head], logs[head], 1)[0])
    except (np.linalg.LinAlgError, TypeError, ValueError):
        return ModeVerdict("inconclusive", float("nan"), float("nan"), expected, grid, logs)
    ok = growth >= expected * (1.0 - fit_tolerance) and growth > delta
    verdict = "no_bounded_nontrivial" if ok else "inconclusive"
    return ModeVerdict(verdict, growth, decay, expected, grid, logs)
