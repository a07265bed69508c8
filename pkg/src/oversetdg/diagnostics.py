"""Discrete norms, errors against an exact solution, and energy reports."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dgoperator import sample_state
from .hyperbolic import ExactSolution
from .mesh import OversetMesh, Subdomain
from .polybasis import QuadratureBasis, gauss_legendre, interpolation_matrix


def domain_norm_sq(states, sub: Subdomain, basis: QuadratureBasis) -> float:
    """``sum_k J_k sum_j w_j |U_kj|^2`` over one subdomain.

    ``states`` is ``(K, N + 1)`` for a scalar or ``(K, N + 1, m)``.
    """
    U = np.asarray(states, dtype=float)
    if U.ndim == 2:
        U = U[..., None]
    if U.shape[:2] != (sub.K, basis.size):
        raise ValueError(f"state shape {U.shape} does not match {sub.K} elements of order {basis.order}")
    per_node = np.sum(U * U, axis=2)
    return float(np.sum(sub.jacobians * (per_node @ basis.weights)))


def overlap_norm_sq(states, sub: Subdomain, basis: QuadratureBasis, lo: float, hi: float) -> float:
    """Exact L2 norm squared of the element polynomials over ``[lo, hi]``.

    Each element is clipped to the interval and integrated with an
    ``N + 1`` point Gauss rule, which is exact for the degree ``2N``
    integrand.
    """
    U = np.asarray(states, dtype=float)
    if U.ndim == 2:
        U = U[..., None]
    z, wq = gauss_legendre(basis.size)
    total = 0.0
    for k in range(sub.K):
        xl, xr = sub.boundaries[k], sub.boundaries[k + 1]
        s, e = max(xl, lo), min(xr, hi)
        if e <= s:
            continue
        x = 0.5 * (s + e) + 0.5 * (e - s) * z
        xi = 2.0 * (x - xl) / (xr - xl) - 1.0
        vals = interpolation_matrix(basis, xi) @ U[k]
        total += 0.5 * (e - s) * float(np.sum(wq * np.sum(vals * vals, axis=1)))
    return total


def overset_domain_norm(state_u, state_v, mesh: OversetMesh, basis: QuadratureBasis, eta: float = 0.5) -> float:
    """Overset-domain energy ``E(U, V; eta)``.

    The overlap ``[b, c]`` is counted once, split between the two grids in
    the proportions ``1 - eta`` (base) and ``eta`` (overset).
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    eu = domain_norm_sq(state_u, mesh.base, basis)
    ev = domain_norm_sq(state_v, mesh.overset, basis)
    ou = overlap_norm_sq(state_u, mesh.base, basis, mesh.b, mesh.c)
    ov = overlap_norm_sq(state_v, mesh.overset, basis, mesh.b, mesh.c)
    return eu + ev - eta * ou - (1.0 - eta) * ov


@dataclass(frozen=True)
class EnergyReport:
    t: float
    e_u_sq: float
    e_v_sq: float
    combined: float
    overset_norm: float

    def row(self):
        return (self.t, self.e_u_sq, self.e_v_sq, self.combined, self.overset_norm)


def energy_report(state, mesh, basis: QuadratureBasis, t: float, eta: float = 0.5) -> EnergyReport:
    """Energies of a semi-discrete state.

    On a single :class:`Subdomain` the overset quantities reduce to the
    single-domain norm (``e_v_sq = 0``).
    """
    if isinstance(mesh, Subdomain):
        e = domain_norm_sq(state[0], mesh, basis)
        return EnergyReport(float(t), e, 0.0, e, e)
    U, V = state
    eu = domain_norm_sq(U, mesh.base, basis)
    ev = domain_norm_sq(V, mesh.overset, basis)
    E = overset_domain_norm(U, V, mesh, basis, eta)
    return EnergyReport(float(t), eu, ev, eu + ev, E)


@dataclass(frozen=True)
class ErrorReport:
    N: int
    err_u: float
    err_v: float
    opt_u: float | None = None
    opt_v: float | None = None

    @property
    def err_total(self) -> float:
        return float(np.hypot(self.err_u, self.err_v))

    @property
    def opt_total(self) -> float | None:
        if self.opt_u is None or self.opt_v is None:
            return None
        return float(np.hypot(self.opt_u, self.opt_v))

    def with_optimal(self, other: "ErrorReport") -> "ErrorReport":
        return ErrorReport(self.N, self.err_u, self.err_v, other.err_u, other.err_v)


def error_norms(state, mesh, basis: QuadratureBasis, exact: ExactSolution, t: float) -> ErrorReport:
    """Discrete L2 errors per subdomain against nodal samples of ``exact``."""
    ref = sample_state(mesh, basis, exact, t)
    subs = (mesh,) if isinstance(mesh, Subdomain) else mesh.subdomains
    errs = [np.sqrt(domain_norm_sq(np.asarray(s) - r, sub, basis)) for s, r, sub in zip(state, ref, subs)]
    if len(errs) == 1:
        errs.append(0.0)
    return ErrorReport(basis.order, float(errs[0]), float(errs[1]))


ENERGY_HEADER = ("t", "e_u_sq", "e_v_sq", "combined", "overset_norm")
ERROR_HEADER = ("N", "err_u", "err_v", "err_total", "opt_u", "opt_v")


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def write_energy_csv(path, series) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ENERGY_HEADER)
        for rep in series:
            w.writerow([_fmt(v) for v in rep.row()])


def read_energy_csv(path) -> list[EnergyReport]:
    with open(path, newline="") as fh:
        return [EnergyReport(*(float(r[k]) for k in ENERGY_HEADER)) for r in csv.DictReader(fh)]


def write_error_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ERROR_HEADER)
        for r in reports:
            w.writerow([r.N, _fmt(r.err_u), _fmt(r.err_v), _fmt(r.err_total), _fmt(r.opt_u), _fmt(r.opt_v)])


def read_error_csv(path) -> list[ErrorReport]:
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            opt = [float(r[k]) if r[k] else None for k in ("opt_u", "opt_v")]
            out.append(ErrorReport(int(r["N"]), float(r["err_u"]), float(r["err_v"]), *opt))
    return out
