"""Dense assembly of the semi-discrete operator and eigenvalue analysis.

The operator is built column by column from :func:`~oversetdg.dgoperator.rhs`
itself, so it is the exact rate map of the scheme (mass matrix included).
Index layout: base elements first, then overset; within an element, node
major then component.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .dgoperator import (
    CouplingConfig,
    external_points,
    rhs_with_data,
    state_shapes,
    unflatten,
    flatten,
)


class EigenSolverError(RuntimeError):
    pass


def _shapes_and_size(mesh, basis, sys):
    shapes = state_shapes(mesh, basis, sys)
    return shapes, int(sum(np.prod(s) for s in shapes))


def assemble(mesh, basis, sys, coupling: CouplingConfig, flux: str | None = None) -> np.ndarray:
    """Homogeneous operator ``L`` with ``rhs(x) = L @ x`` under zero data."""
    if flux is not None and flux != coupling.flux:
        coupling = replace(coupling, flux=flux)
    shapes, n = _shapes_and_size(mesh, basis, sys)
    zero_ext = np.zeros((len(external_points(mesh, coupling)), sys.size))
    L = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        L[:, j] = flatten(rhs_with_data(mesh, basis, sys, coupling, unflatten(e, shapes), zero_ext))
        e[j] = 0.0
    return L


def assemble_forcing(mesh, basis, sys, coupling: CouplingConfig) -> np.ndarray:
    """Matrix ``G`` with ``rhs(x, t) = L @ x + G @ g(t).ravel()``.

    ``g(t)`` is :func:`~oversetdg.dgoperator.external_states`.
    """
    shapes, n = _shapes_and_size(mesh, basis, sys)
    P = len(external_points(mesh, coupling))
    zero = unflatten(np.zeros(n), shapes)
    G = np.empty((n, P * sys.size))
    ext = np.zeros(P * sys.size)
    for j in range(P * sys.size):
        ext[j] = 1.0
        G[:, j] = flatten(rhs_with_data(mesh, basis, sys, coupling, zero, ext.reshape(P, sys.size)))
        ext[j] = 0.0
    return G


def operator_radius(L: np.ndarray) -> float:
    """Cheap bound on the spectral radius (max absolute row sum)."""
    return float(np.max(np.sum(np.abs(L), axis=1), initial=0.0))


def irreducible_blocks(L) -> list[np.ndarray]:
    """Index sets of the irreducible diagonal blocks of ``L``.

    These are the strongly connected components of the nonzero pattern; a
    symmetric permutation brings ``L`` to block triangular form with these
    blocks on the diagonal, so its eigenvalues are theirs.
    """
    n = L.shape[0]
    ncomp, labels = connected_components(csr_matrix(L != 0), directed=True, connection="strong")
    return [np.flatnonzero(labels == c) for c in range(ncomp)] if n else []


def _eig_block(B, rho):
    try:
        lam, vecs = np.linalg.eig(B)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    idx = np.linspace(0, lam.size - 1, min(5, lam.size)).astype(int)
    for i in idx:
        v = vecs[:, i]
        if np.linalg.norm(B @ v - lam[i] * v) > 1e-8 * rho * np.linalg.norm(v):
            raise EigenSolverError(f"eigenpair residual too large for eigenvalue {lam[i]}")
    return lam


def eigenvalues(L) -> np.ndarray:
    """All eigenvalues of a dense real matrix.

    The matrix is split into its irreducible diagonal blocks first, so that
    one-way couplings (base to overset) do not create artificially defective
    eigenvalues. Each block goes to LAPACK ``geev`` (balancing, Hessenberg
    reduction, shifted QR) and a sample of its eigenpairs is checked against
    ``1e-8 rho``.
    """
    L = np.asarray(L, dtype=float)
    if not np.all(np.isfinite(L)):
        raise EigenSolverError("matrix has non-finite entries")
    if L.size == 0:
        return np.zeros(0, dtype=complex)
    rho = max(operator_radius(L), np.finfo(float).tiny)
    parts = [_eig_block(L[np.ix_(idx, idx)], rho) for idx in irreducible_blocks(L)]
    return np.concatenate(parts).astype(complex)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    tol: float
    trace: float
    radius: float

    @property
    def unstable_mask(self) -> np.ndarray:
        return self.eigenvalues.real > self.tol

    @property
    def stable(self) -> np.ndarray:
        return self.eigenvalues[~self.unstable_mask]

    @property
    def unstable(self) -> np.ndarray:
        return self.eigenvalues[self.unstable_mask]

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def unstable_count(self) -> int:
        return int(np.count_nonzero(self.unstable_mask))


def analyze(L, tol: float | None = None) -> Spectrum:
    """Eigenvalues of ``L`` with the default tolerance ``1e-9 rho(L)``."""
    lam = eigenvalues(L)
    rho = operator_radius(L)
    if tol is None:
        tol = 1e-9 * rho
    return Spectrum(eigenvalues=lam, tol=tol, trace=float(np.trace(L)), radius=rho)


def classify(spectrum: Spectrum, tol: float | None = None) -> tuple[int, int, float]:
    """``(stable count, unstable count, max real part)``; unstable iff ``Re > tol``."""
    if tol is None:
        tol = spectrum.tol
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    unstable = int(np.count_nonzero(spectrum.eigenvalues.real > tol))
    return spectrum.eigenvalues.size - unstable, unstable, spectrum.max_real


def pairing_check(values, tol: float) -> bool:
    """True iff the eigenvalues split into pairs closer than ``tol``."""
    lam = np.asarray(getattr(values, "eigenvalues", values))
    if lam.size % 2:
        return False
    remaining = list(lam)
    while remaining:
        z = remaining.pop(0)
        dist = np.abs(np.asarray(remaining) - z)
        j = int(np.argmin(dist))
        if dist[j] > tol:
            return False
        remaining.pop(j)
    return True


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "stable"])
        for z, bad in zip(spectrum.eigenvalues, spectrum.unstable_mask):
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", 0 if bad else 1])


def read_spectrum_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    lam = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    stable = np.array([int(r["stable"]) for r in rows], dtype=int)
    return lam, stable
