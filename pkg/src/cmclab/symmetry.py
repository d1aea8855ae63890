"""Finite subgroups of ``O(p+1) x O(q+1)``, orbits of the base point, admissibility.

A group is admissible when no nonzero bilinear form ``sum a_kl x_k y_l`` is
invariant; then the Jacobi fields of the minimal Clifford hypersurface have no
invariant component.  The dimension of the invariant space is computed twice,
by the rank of the Reynolds projection and by the character formula.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .clifford import DomainError, minimal_angle

ORTHO_TOL = 1e-10
ELEMENT_TOL = 1e-8
DEFAULT_ORDER_CAP = 20000


class GroupError(RuntimeError):
    """Closure did not terminate below the order cap."""


class ConfigurationError(ValueError):
    """Malformed generator spec or ambiguous orbit deduplication."""


class ConditioningError(ArithmeticError):
    """The two admissibility computations disagree."""


@dataclass(frozen=True, eq=False)
class OrthogonalPair:
    """``(sigma_p, sigma_q)`` acting diagonally on ``R^{p+1} x R^{q+1}``."""

    sigma_p: np.ndarray
    sigma_q: np.ndarray

    def __post_init__(self):
        for name in ("sigma_p", "sigma_q"):
            m = np.array(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ConfigurationError(f"{name} must be a square matrix, got shape {m.shape}")
            if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) >= ORTHO_TOL:
                raise ConfigurationError(f"{name} is not orthogonal")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def identity(cls, p: int, q: int) -> "OrthogonalPair":
        return cls(np.eye(p + 1), np.eye(q + 1))

    def compose(self, other: "OrthogonalPair") -> "OrthogonalPair":
        """``self o other``."""
        return OrthogonalPair._trusted(self.sigma_p @ other.sigma_p, self.sigma_q @ other.sigma_q)

    def inverse(self) -> "OrthogonalPair":
        return OrthogonalPair._trusted(self.sigma_p.T, self.sigma_q.T)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Act on points of ``R^{n+2}`` stored as rows (x-block first)."""
        pts = np.atleast_2d(points)
        k = self.sigma_p.shape[0]
        out = np.empty_like(pts, dtype=float)
        out[:, :k] = pts[:, :k] @ self.sigma_p.T
        out[:, k:] = pts[:, k:] @ self.sigma_q.T
        return out if np.ndim(points) == 2 else out[0]

    def full_matrix(self) -> np.ndarray:
        k, l = self.sigma_p.shape[0], self.sigma_q.shape[0]
        m = np.zeros((k + l, k + l))
        m[:k, :k] = self.sigma_p
        m[k:, k:] = self.sigma_q
        return m

    def close_to(self, other: "OrthogonalPair", tol: float = ELEMENT_TOL) -> bool:
        return (np.max(np.abs(self.sigma_p - other.sigma_p)) < tol
                and np.max(np.abs(self.sigma_q - other.sigma_q)) < tol)

    def key(self) -> bytes:
        flat = np.concatenate([self.sigma_p.ravel(), self.sigma_q.ravel()])
        return np.round(flat * 1e6).astype(np.int64).tobytes()

    @classmethod
    def _trusted(cls, sp, sq) -> "OrthogonalPair":
        obj = object.__new__(cls)
        sp = np.asarray(sp, dtype=float)
        sq = np.asarray(sq, dtype=float)
        sp.setflags(write=False)
        sq.setflags(write=False)
        object.__setattr__(obj, "sigma_p", sp)
        object.__setattr__(obj, "sigma_q", sq)
        return obj


def rho(p: int, q: int) -> OrthogonalPair:
    """Reflections fixing ``x_1`` and ``y_1`` and negating every other coordinate."""
    return OrthogonalPair(np.diag([1.0] + [-1.0] * p), np.diag([1.0] + [-1.0] * q))


def plane_rotation(dim: int, plane: Sequence[int], angle: float) -> np.ndarray:
    """Rotation by ``angle`` in the coordinate plane ``plane`` (1-based indices)."""
    a, b = (int(plane[0]) - 1, int(plane[1]) - 1)
    if not (0 <= a < dim and 0 <= b < dim and a != b):
        raise ConfigurationError(f"invalid rotation plane {plane} for dimension {dim}")
    m = np.eye(dim)
    c, s = math.cos(angle), math.sin(angle)
    m[a, a] = c
    m[b, b] = c
    m[a, b] = -s
    m[b, a] = s
    return m


def _angle(value: Any, path: str) -> float:
    """Angle given as ``[num, den]`` / ``{"num":, "den":}`` meaning ``pi * num/den``."""
    if isinstance(value, dict):
        num, den = value.get("num"), value.get("den", 1)
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
    elif isinstance(value, (int, Fraction)):
        num, den = value, 1
    else:
        raise ConfigurationError(f"{path}: angle must be [num, den] (a rational multiple of pi)")
    if not isinstance(num, int) or not isinstance(den, int) or den == 0:
        raise ConfigurationError(f"{path}: angle numerator/denominator must be integers, den != 0")
    return math.pi * num / den


def compile_generator(p: int, q: int, spec: dict, path: str = "generators") -> OrthogonalPair:
    """Compile one entry of the generator spec into an :class:`OrthogonalPair`.

    Kinds: ``rotation`` (``x_plane``/``x_angle`` and/or ``y_plane``/``y_angle``),
    ``signs`` (``x``/``y`` lists of +-1), ``rho``, ``matrix`` (``x``/``y`` entries).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError(f"{path}: each generator needs a 'kind'")
    kind = spec["kind"]
    if kind == "rho":
        return rho(p, q)
    if kind == "rotation":
        sp, sq = np.eye(p + 1), np.eye(q + 1)
        if "x_angle" in spec:
            sp = plane_rotation(p + 1, spec.get("x_plane", [1, 2]), _angle(spec["x_angle"], f"{path}.x_angle"))
        if "y_angle" in spec:
            sq = plane_rotation(q + 1, spec.get("y_plane", [1, 2]), _angle(spec["y_angle"], f"{path}.y_angle"))
        return OrthogonalPair(sp, sq)
    if kind == "signs":
        x = spec.get("x", [1] * (p + 1))
        y = spec.get("y", [1] * (q + 1))
        if len(x) != p + 1 or len(y) != q + 1 or any(v not in (1, -1) for v in list(x) + list(y)):
            raise ConfigurationError(f"{path}: signs need {p + 1} x-entries and {q + 1} y-entries of +-1")
        return OrthogonalPair(np.diag(np.asarray(x, float)), np.diag(np.asarray(y, float)))
    if kind == "matrix":
        try:
            return OrthogonalPair(np.asarray(spec["x"], float).reshape(p + 1, p + 1),
                                  np.asarray(spec["y"], float).reshape(q + 1, q + 1))
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"{path}: bad matrix generator ({exc})") from exc
    raise ConfigurationError(f"{path}.kind: unknown generator kind {kind!r}")


@dataclass
class SymmetryGroup:
    p: int
    q: int
    elements: list[OrthogonalPair]
    generator_spec: Any = None

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index_of(self, g: OrthogonalPair) -> int | None:
        for i, h in enumerate(self.elements):
            if h.close_to(g):
                return i
        return None


def close_group(p: int, q: int, generators: Iterable, order_cap: int = DEFAULT_ORDER_CAP,
                generator_spec: Any = None) -> SymmetryGroup:
    """Breadth-first closure of the generators under composition."""
    if order_cap < 1:
        raise DomainError("order_cap must be >= 1")
    gens = []
    for k, g in enumerate(generators):
        if isinstance(g, dict):
            g = compile_generator(p, q, g, f"generators[{k}]")
        if g.sigma_p.shape != (p + 1, p + 1) or g.sigma_q.shape != (q + 1, q + 1):
            raise ConfigurationError(f"generators[{k}] has the wrong block sizes")
        gens.append(g)
    ident = OrthogonalPair.identity(p, q)
    elements = [ident]
    seen = {ident.key(): 0}
    queue = deque([ident])
    while queue:
        h = queue.popleft()
        for g in gens:
            for cand in (g.compose(h), g.inverse().compose(h)):
                k = cand.key()
                if k in seen:
                    continue
                seen[k] = len(elements)
                elements.append(cand)
                if len(elements) > order_cap:
                    raise GroupError(f"group not finite at this cap: reached {len(elements)} "
                                     f"elements (cap {order_cap})")
                queue.append(cand)
    group = SymmetryGroup(p, q, elements, generator_spec)
    _verify_closed(group, seen)
    return group


def _verify_closed(group: SymmetryGroup, seen: dict) -> None:
    els = group.elements
    sample = els if len(els) <= 64 else [els[i] for i in np.linspace(0, len(els) - 1, 64).astype(int)]
    for a in sample:
        if a.inverse().key() not in seen:
            raise GroupError("closure is not inverse-closed within tolerance")
        for b in sample[:16]:
            if a.compose(b).key() not in seen:
                raise GroupError("closure is not closed under composition within tolerance")


def group_from_spec(p: int, q: int, spec: Sequence[dict], order_cap: int = DEFAULT_ORDER_CAP):
    return close_group(p, q, spec, order_cap, generator_spec=list(spec))


def base_point(p: int, q: int) -> np.ndarray:
    """``mu_0 = (sqrt(p/n), 0, ..., 0 | sqrt(q/n), 0, ..., 0)`` on ``C_{t_*}``."""
    if p < 1 or q < 1:
        raise DomainError("p and q must be >= 1")
    n = p + q
    mu = np.zeros(n + 2)
    mu[0] = math.sqrt(p / n)
    mu[p + 1] = math.sqrt(q / n)
    return mu


@dataclass
class GluingSet:
    p: int
    q: int
    points: np.ndarray
    group: SymmetryGroup | None = field(default=None, repr=False)
    # element index mapping mu_0 onto each point
    transporters: list[int] = field(default_factory=list, repr=False)

    @property
    def m(self) -> int:
        return len(self.points)

    def x_part(self) -> np.ndarray:
        return self.points[:, : self.p + 1]

    def y_part(self) -> np.ndarray:
        return self.points[:, self.p + 1:]


def orbit(group: SymmetryGroup, point=None, dedupe_tol: float = 1e-8) -> GluingSet:
    """Orbit of ``point`` (default ``mu_0``) under the group."""
    p, q = group.p, group.q
    mu = base_point(p, q) if point is None else np.asarray(point, dtype=float)
    ts = minimal_angle(p, q)
    if abs(np.linalg.norm(mu[: p + 1]) - math.cos(ts)) > 1e-10 or \
            abs(np.linalg.norm(mu[p + 1:]) - math.sin(ts)) > 1e-10:
        raise DomainError("orbit base point must lie on the minimal Clifford hypersurface")
    images = np.array([g.apply(mu) for g in group.elements])
    kept, owners = [], []
    for idx, img in enumerate(images):
        dist = [float(np.max(np.abs(img - k))) for k in kept]
        close = [d for d in dist if d < dedupe_tol]
        near = [d for d in dist if dedupe_tol <= d < 10 * dedupe_tol]
        if near:
            raise ConfigurationError(f"orbit dedupe ambiguity: images within {max(near):.2e} "
                                     f"but outside tolerance {dedupe_tol:.1e}")
        if not close:
            kept.append(img)
            owners.append(idx)
    if group.order % len(kept):
        raise GroupError(f"orbit size {len(kept)} does not divide group order {group.order}")
    return GluingSet(p, q, np.array(kept), group, owners)


def stabilizer_order(group: SymmetryGroup, point=None, tol: float = 1e-8) -> int:
    mu = base_point(group.p, group.q) if point is None else np.asarray(point, float)
    return sum(1 for g in group.elements if np.max(np.abs(g.apply(mu) - mu)) < tol)


def reynolds_operator(group: SymmetryGroup) -> np.ndarray:
    """Average of ``A -> sigma_p^T A sigma_q`` as a matrix on row-major ``vec(A)``."""
    k, l = group.p + 1, group.q + 1
    acc = np.zeros((k * l, k * l))
    for g in group.elements:
        # vec_row(S^T A T) = (S^T kron T^T) vec_row(A)
        acc += np.kron(g.sigma_p.T, g.sigma_q.T)
    return acc / group.order


@dataclass(frozen=True)
class Admissibility:
    dimension: int
    basis: list[np.ndarray]
    reynolds_rank: int
    trace_value: float

    @property
    def admissible(self) -> bool:
        return self.dimension == 0


def fixed_bilinear_dimension(group: SymmetryGroup) -> Admissibility:
    """Dimension and basis of the invariant bilinear forms ``x^T A y``."""
    k, l = group.p + 1, group.q + 1
    proj = reynolds_operator(group)
    # numerical kernel of P - I
    _, sv, vt = np.linalg.svd(proj - np.eye(k * l))
    tol = 1e-8 * max(1.0, sv[0])
    null = vt[sv < tol]
    rank = int(null.shape[0])
    trace_value = float(sum(np.trace(g.sigma_p) * np.trace(g.sigma_q) for g in group.elements) / group.order)
    if abs(rank - trace_value) >= 0.5:
        raise ConditioningError(f"Reynolds rank {rank} disagrees with trace formula {trace_value:.6f}")
    basis = [row.reshape(k, l) for row in null]
    return Admissibility(int(round(trace_value)), basis, rank, trace_value)


def contains_rho(group: SymmetryGroup, tol: float = 1e-8) -> bool:
    r = rho(group.p, group.q)
    return any(g.close_to(r, tol) for g in group.elements)


def kernel_orthogonality_matrix(gluing: GluingSet) -> np.ndarray:
    """``M_kl = sum_mu x_k(mu) y_l(mu)``; vanishes when the source sum is orthogonal to the kernel."""
    if gluing.m == 0:
        raise DomainError("gluing set is empty")
    return gluing.x_part().T @ gluing.y_part()


# --- fixtures for the worked examples ----------------------------------------

def example1_generators(tau1, tau2) -> list[dict]:
    """Lattice group on the Clifford torus (``p = q = 1``); ``tau`` entries are
    ``(alpha, beta)`` angles, each a ``[num, den]`` multiple of pi."""
    gens = []
    for a, b in (tau1, tau2):
        gens.append({"kind": "rotation", "x_plane": [1, 2], "x_angle": list(a),
                     "y_plane": [1, 2], "y_angle": list(b)})
    gens.append({"kind": "rho"})
    return gens


def example2_generators(p: int, q: int, tau1, tau2) -> list[dict]:
    """Example-1 rotations in the first planes, ``rho``, and sign flips of ``x_3..``, ``y_3..``."""
    gens = []
    for a, b in (tau1, tau2):
        g = {"kind": "rotation"}
        if p >= 1:
            g.update(x_plane=[1, 2], x_angle=list(a))
        if q >= 1:
            g.update(y_plane=[1, 2], y_angle=list(b))
        gens.append(g)
    gens.append({"kind": "rho"})
    for k in range(2, p + 1):
        x = [1] * (p + 1)
        x[k] = -1
        gens.append({"kind": "signs", "x": x})
    for k in range(2, q + 1):
        y = [1] * (q + 1)
        y[k] = -1
        gens.append({"kind": "signs", "y": y})
    return gens


def example3_generators(p: int, q: int) -> list[dict]:
    """Independent sign flips of ``x_2..x_{p+1}`` and ``y_2..y_{q+1}``."""
    gens = []
    for k in range(1, p + 1):
        x = [1] * (p + 1)
        x[k] = -1
        gens.append({"kind": "signs", "x": x})
    for k in range(1, q + 1):
        y = [1] * (q + 1)
        y[k] = -1
        gens.append({"kind": "signs", "y": y})
    return gens


def default_admissible_generators(p: int, q: int) -> list[dict]:
    """Example-2 group with ``tau_1 = (pi, 0)``, ``tau_2 = (0, 2 pi)``.

    The half-turn of the first ``x``-plane sends ``mu_0`` to ``(-x_0, y_0)``, so the
    orbit has two points and no invariant bilinear form survives.
    """
    return example2_generators(p, q, ([1, 1], [0, 1]), ([0, 1], [2, 1]))
