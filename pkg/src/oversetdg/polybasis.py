"""Legendre-Gauss-Lobatto nodal basis on the reference element [-1, 1].

Everything else in the package consumes a :class:`QuadratureBasis`: the
nodes, quadrature weights, barycentric weights and the collocation
derivative matrix ``D[j, n] = l_n'(xi_j)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class QuadratureBasis:
    """LGL nodes, weights and derivative matrix for polynomial order ``N``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray
    bary_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.order + 1


def legendre_and_derivatives(n: int, x):
    """Return ``P_n(x), P_n'(x), P_n''(x)`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev, p = np.ones_like(x), x.copy()
    dp_prev, dp = np.zeros_like(x), np.ones_like(x)
    ddp_prev, ddp = np.zeros_like(x), np.zeros_like(x)
    if n == 0:
        return p_prev, dp_prev, ddp_prev
    for k in range(1, n):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        dp_next = dp_prev + (2 * k + 1) * p
        ddp_next = ddp_prev + (2 * k + 1) * dp
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
        ddp_prev, ddp = ddp, ddp_next
    return p, dp, ddp


def _lgl_nodes(N: int) -> np.ndarray:
    # interior nodes are the roots of P_N'; Chebyshev-Gauss-Lobatto start
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    interior = x[1:-1].copy()
    for _ in range(100):
        _, dp, ddp = legendre_and_derivatives(N, interior)
        delta = dp / ddp
        interior -= delta
        if np.max(np.abs(delta), initial=0.0) <= 4 * _EPS:
            break
    else:  # pragma: no cover - Newton converges in a handful of steps
        raise RuntimeError(f"LGL Newton iteration did not converge for N={N}")
    x[1:-1] = interior
    x[0], x[-1] = -1.0, 1.0
    # enforce exact mirror symmetry
    x = 0.5 * (x - x[::-1])
    return x


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def _diff_matrix(nodes: np.ndarray, bary: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    # negative-sum trick: rows annihilate constants to rounding
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@functools.lru_cache(maxsize=None)
def build_basis(N: int) -> QuadratureBasis:
    """Build the LGL basis of polynomial order ``N`` (``N + 1`` nodes).

    Quadrature with the returned weights is exact for polynomials of degree
    ``2N - 1``. Results are cached; the arrays are read-only.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"polynomial order must be an integer >= 1, got {N!r}")
    N = int(N)
    nodes = _lgl_nodes(N)
    p, _, _ = legendre_and_derivatives(N, nodes)
    weights = 2.0 / (N * (N + 1) * p**2)
    bary = barycentric_weights(nodes)
    D = _diff_matrix(nodes, bary)
    for arr in (nodes, weights, bary, D):
        arr.setflags(write=False)
    return QuadratureBasis(order=N, nodes=nodes, weights=weights, diff_matrix=D, bary_weights=bary)


def lagrange_values(basis: QuadratureBasis, xi: float) -> np.ndarray:
    """Values of all ``N + 1`` Lagrange cardinal polynomials at ``xi``."""
    xi = float(xi)
    if not -1.0 - 1e-14 <= xi <= 1.0 + 1e-14:
        raise ValueError(f"reference coordinate {xi} lies outside [-1, 1]")
    xi = min(max(xi, -1.0), 1.0)
    diff = xi - basis.nodes
    # closer than rounding to a node: the barycentric quotient would overflow
    hit = np.flatnonzero(np.abs(diff) <= _EPS)
    if hit.size:
        out = np.zeros(basis.size)
        out[hit[0]] = 1.0
        return out
    t = basis.bary_weights / diff
    return t / t.sum()


def interpolation_matrix(basis: QuadratureBasis, points) -> np.ndarray:
    """Rows are :func:`lagrange_values` at each reference point."""
    return np.array([lagrange_values(basis, p) for p in np.atleast_1d(points)])


def discrete_inner_product(U, W, basis: QuadratureBasis) -> float:
    """LGL quadrature inner product ``sum_j U_j . W_j w_j``.

    ``U`` and ``W`` are nodal vectors of length ``N + 1``, or ``(N + 1, m)``
    arrays of state vectors, in which case components are summed as well.
    """
    U = np.asarray(U, dtype=float)
    W = np.asarray(W, dtype=float)
    if U.shape != W.shape or U.shape[0] != basis.size:
        raise ValueError(
            f"nodal arrays must both have leading length {basis.size}, got {U.shape} and {W.shape}"
        )
    prod = U * W
    if prod.ndim > 1:
        prod = prod.reshape(basis.size, -1).sum(axis=1)
    return float(np.dot(prod, basis.weights))


def skew_matrix(basis: QuadratureBasis) -> np.ndarray:
    """Skew-symmetric ``S[j, n] = -(w_j D[j, n] - w_n D[n, j])``."""
    WD = basis.weights[:, None] * basis.diff_matrix
    S = -(WD - WD.T)
    return 0.5 * (S - S.T)


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights (exact to degree ``2n - 1``)."""
    return np.polynomial.legendre.leggauss(n)
