"""Overlapping element partitions and donor-point resolution."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .polybasis import QuadratureBasis, lagrange_values


@dataclass(frozen=True, eq=False)
class Subdomain:
    """A 1-D interval split into ``K`` consecutive elements."""

    x_left: float
    x_right: float
    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("a subdomain needs at least one element")
        if np.any(np.diff(b) <= 0):
            raise ValueError("element boundaries must be strictly increasing")
        if b[0] != self.x_left or b[-1] != self.x_right:
            raise ValueError("element boundaries must span [x_left, x_right]")
        b.setflags(write=False)
        object.__setattr__(self, "boundaries", b)

    @property
    def K(self) -> int:
        return self.boundaries.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def jacobians(self) -> np.ndarray:
        return 0.5 * self.widths

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    def affine_map(self, k, xi):
        """Physical coordinate of reference point ``xi`` in element ``k``."""
        xl = self.boundaries[k]
        return xl + 0.5 * (np.asarray(xi) + 1.0) * (self.boundaries[np.asarray(k) + 1] - xl)

    def node_coordinates(self, basis: QuadratureBasis) -> np.ndarray:
        """``(K, N + 1)`` physical coordinates of all element nodes."""
        xl = self.boundaries[:-1, None]
        return xl + 0.5 * (basis.nodes[None, :] + 1.0) * self.widths[:, None]


def uniform_subdomain(x_left: float, x_right: float, K: int) -> Subdomain:
    if K < 1:
        raise ValueError(f"element count must be >= 1, got {K}")
    if not x_right > x_left:
        raise ValueError(f"empty interval [{x_left}, {x_right}]")
    b = np.linspace(x_left, x_right, K + 1)
    b[0], b[-1] = x_left, x_right
    return Subdomain(float(x_left), float(x_right), b)


def locate(sub: Subdomain, x: float) -> tuple[int, float]:
    """Element index and reference coordinate of physical point ``x``.

    Points on an interior element edge resolve to the element on the right.
    """
    x = float(x)
    span = sub.length
    if x < sub.x_left - 1e-13 * span or x > sub.x_right + 1e-13 * span:
        raise ValueError(f"point {x} lies outside [{sub.x_left}, {sub.x_right}]")
    k = int(np.searchsorted(sub.boundaries, x, side="right")) - 1
    k = min(max(k, 0), sub.K - 1)
    xl, xr = sub.boundaries[k], sub.boundaries[k + 1]
    xi = 2.0 * (x - xl) / (xr - xl) - 1.0
    return k, float(min(max(xi, -1.0), 1.0))


@dataclass(frozen=True)
class DonorPoint:
    domain: str  # "base" | "overset"
    x: float
    element: int
    xi: float


def resolve(sub: Subdomain, x: float, domain: str) -> DonorPoint:
    k, xi = locate(sub, x)
    return DonorPoint(domain=domain, x=float(x), element=k, xi=xi)


@dataclass(frozen=True, eq=False)
class OversetMesh:
    """Base grid on ``[a, c]`` and overset grid on ``[b, d]`` with ``a < b < c < d``.

    ``point_b`` is ``x = b`` resolved in the base grid, ``point_c`` is
    ``x = c`` resolved in the overset grid, and ``overlap_points`` holds one
    ``(base, overset)`` donor pair per interior penalty location.
    """

    base: Subdomain
    overset: Subdomain
    point_b: DonorPoint
    point_c: DonorPoint
    overlap_points: tuple = ()

    @property
    def a(self):
        return self.base.x_left

    @property
    def b(self):
        return self.overset.x_left

    @property
    def c(self):
        return self.base.x_right

    @property
    def d(self):
        return self.overset.x_right

    @property
    def subdomains(self):
        return (self.base, self.overset)


def build_mesh(a, b, c, d, K_u: int, K_v: int) -> OversetMesh:
    """Uniform overlapping partitions of ``[a, c]`` and ``[b, d]``."""
    if not (a < b and c < d):
        raise ValueError(f"need a < b and c < d, got a={a}, b={b}, c={c}, d={d}")
    if not b < c:
        raise ValueError(f"degenerate overlap: b={b} must be < c={c}")
    base = uniform_subdomain(a, c, K_u)
    overset = uniform_subdomain(b, d, K_v)
    return OversetMesh(
        base=base,
        overset=overset,
        point_b=resolve(base, b, "base"),
        point_c=resolve(overset, c, "overset"),
    )


def sinusoid_geometry(offset: float = 0.25) -> tuple[float, float, float, float]:
    """Subdomain ends ``(a, b, c, d) = (o, 3, 5 + o, 8)``."""
    return (0.0 + offset, 3.0, 5.0 + offset, 8.0)


def place_overlap_points(mesh: OversetMesh, M: int) -> OversetMesh:
    """Equally spaced interior points ``x_m = b + m (c - b) / (M + 1)``."""
    if M < 0:
        raise ValueError(f"overlap point count must be >= 0, got {M}")
    b, c = mesh.b, mesh.c
    pts = tuple(
        (resolve(mesh.base, x, "base"), resolve(mesh.overset, x, "overset"))
        for x in (b + m * (c - b) / (M + 1) for m in range(1, M + 1))
    )
    return replace(mesh, overlap_points=pts)


def interpolate_at(states: np.ndarray, point: DonorPoint, basis: QuadratureBasis) -> np.ndarray:
    """Evaluate the element polynomial holding ``point``; ``states`` is ``(K, N+1, m)``."""
    return lagrange_values(basis, point.xi) @ np.asarray(states)[point.element]
