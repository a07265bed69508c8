"""Semi-discrete DGSEM right-hand side for single and overset domains.

Each element is advanced with the strong-form nodal update

    dU_j/dt = -1/(J w_j) [ d_jN (F*_R - F_N) - d_j0 (F*_L - F_0)
                           + w_j (A D U)_j + sum_p l_j(xi_p) Sigma_p diff_p ]

where the last sum collects point penalties. Three coupling modes join the
two grids of an :class:`~oversetdg.mesh.OversetMesh`:

``characteristic``
    the donor polynomial supplies the external flux state at ``b`` and ``c``.
``penalty``
    characteristic coupling plus the scaled penalties with
    ``Sigma_u = gamma_u |A-|`` and ``Sigma_v = gamma_v A+``.
``decoupled-exact``
    exact data at ``b`` and ``c``; no coupling (the "optimal" reference).
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import FLUXES, ExactSolution, SymmetricSystem
from .mesh import OversetMesh, Subdomain, place_overlap_points
from .polybasis import QuadratureBasis, lagrange_values

MODES = ("characteristic", "penalty", "decoupled-exact")


class AdmissibilityWarning(UserWarning):
    """Penalty matrices outside the sufficient stability bounds."""


@dataclass(frozen=True)
class CouplingConfig:
    mode: str = "characteristic"
    flux: str = "upwind"
    gamma_u: float = 1.0
    gamma_v: float = 1.0
    M: int = 0
    epsilon: float = 0.0
    eta: float = 0.5
    # central flux at the overlap boundaries is unstable for systems; only
    # eigenvalue studies should set this
    allow_central_coupling: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown coupling mode {self.mode!r}; expected one of {MODES}")
        if self.flux not in FLUXES:
            raise ValueError(f"unknown numerical flux {self.flux!r}; expected one of {tuple(FLUXES)}")
        if not self.epsilon >= 0:
            raise ValueError(f"overlap penalty strength must be >= 0, got {self.epsilon}")
        if not 0 < self.eta < 1:
            raise ValueError(f"norm parameter eta must lie in (0, 1), got {self.eta}")
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"overlap penalty count must be a non-negative integer, got {self.M}")

    @property
    def sigma_scales(self):
        return self.gamma_u, self.gamma_v


@dataclass(frozen=True)
class BoundarySpec:
    """External states at ``x = a`` and ``x = d`` (``None`` means zero data).

    ``interface`` supplies the states at ``b`` and ``c`` in decoupled-exact mode.
    """

    left: ExactSolution | None = None
    right: ExactSolution | None = None
    interface: ExactSolution | None = None

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def exact(cls, solution: ExactSolution):
        return cls(left=solution, right=solution, interface=solution)

    @property
    def is_zero(self) -> bool:
        return self.left is None and self.right is None and self.interface is None


def _external(sol: ExactSolution | None, x: float, t: float, m: int) -> np.ndarray:
    if sol is None:
        return np.zeros(m)
    g = np.asarray(sol.state(np.asarray(x, dtype=float), t), dtype=float).reshape(-1)
    if g.size != m:
        raise ValueError(f"boundary solution has {g.size} components, system has {m}")
    return g


def penalty_lift(rate, xi_p: float, Sigma, diff, basis: QuadratureBasis, J: float) -> np.ndarray:
    """Return ``rate`` plus the nodal lift of a point penalty ``Sigma @ diff`` at ``xi_p``.

    ``rate`` is one element's ``(N + 1, m)`` array; the input is not modified.
    """
    ell = lagrange_values(basis, xi_p)
    force = np.asarray(Sigma, dtype=float) @ np.asarray(diff, dtype=float)
    out = np.array(rate, dtype=float, copy=True)
    out -= np.outer(ell / (J * basis.weights), force)
    return out


def element_rates(U, sub: Subdomain, basis: QuadratureBasis, sys: SymmetricSystem, flux: str, g_left, g_right):
    """Standard DGSEM rates on one subdomain with external states at both ends.

    ``U`` has shape ``(K, N + 1, m)``.
    """
    fstar = FLUXES[flux]
    A = sys.A
    w = basis.weights
    inv_J = 1.0 / sub.jacobians
    left_states = np.concatenate([np.asarray(g_left, dtype=float)[None, :], U[:, -1, :]], axis=0)
    right_states = np.concatenate([U[:, 0, :], np.asarray(g_right, dtype=float)[None, :]], axis=0)
    F = fstar(sys, left_states, right_states)  # (K + 1, m): faces left to right

    dU = np.einsum("jn,knm->kjm", basis.diff_matrix, U)
    rate = -(dU @ A.T) * inv_J[:, None, None]
    rate[:, -1, :] -= (F[1:] - U[:, -1, :] @ A.T) * (inv_J[:, None] / w[-1])
    rate[:, 0, :] += (F[:-1] - U[:, 0, :] @ A.T) * (inv_J[:, None] / w[0])
    return rate


@dataclass(eq=False)
class _Plan:
    mesh: object
    basis: QuadratureBasis
    sys: SymmetricSystem
    coupling: CouplingConfig
    single: bool
    ell_b: np.ndarray = None
    ell_c: np.ndarray = None
    donor_at_b: bool = True
    donor_at_c: bool = True
    lifts: dict = field(default_factory=dict)


def _lift_coeff(basis, sub, point):
    return lagrange_values(basis, point.xi) / (sub.jacobians[point.element] * basis.weights)


@functools.lru_cache(maxsize=64)
def _plan(mesh, basis: QuadratureBasis, sys: SymmetricSystem, coupling: CouplingConfig) -> _Plan:
    if isinstance(mesh, Subdomain):
        return _Plan(mesh, basis, sys, coupling, single=True)
    if not isinstance(mesh, OversetMesh):
        raise TypeError(f"expected Subdomain or OversetMesh, got {type(mesh).__name__}")
    if coupling.flux == "central" and coupling.mode == "characteristic" and not coupling.allow_central_coupling:
        raise ValueError(
            "central flux at the overlap boundaries is unstable; set allow_central_coupling=True "
            "for eigenvalue studies"
        )
    if coupling.mode == "penalty":
        report = verify_admissibility(sys, coupling)
        if not report.admissible:
            warnings.warn(
                "penalty matrices violate the sufficient stability bounds: " + "; ".join(report.violations),
                AdmissibilityWarning,
                stacklevel=3,
            )
    if coupling.mode != "decoupled-exact" and len(mesh.overlap_points) != coupling.M:
        mesh = place_overlap_points(mesh, coupling.M)
    for p in (mesh.point_b, mesh.point_c):
        if p is None or p.element is None:
            raise RuntimeError("unresolved donor point")
    plan = _Plan(mesh, basis, sys, coupling, single=False)
    # a scalar right-going wave has nothing incoming at c, so the base grid
    # never sees the overset solution there
    plan.donor_at_b = bool(np.any(sys.A_plus))
    plan.donor_at_c = bool(np.any(sys.A_minus_abs))
    plan.ell_b = lagrange_values(basis, mesh.point_b.xi)
    plan.ell_c = lagrange_values(basis, mesh.point_c.xi)
    base, over = mesh.base, mesh.overset
    N = basis.order
    w = basis.weights
    edge = np.zeros(N + 1)
    plan.lifts = {
        "base_b": _lift_coeff(basis, base, mesh.point_b),
        "over_c": _lift_coeff(basis, over, mesh.point_c),
        "base_c": _edge(edge, N, base.jacobians[-1], w),
        "over_b": _edge(edge, 0, over.jacobians[0], w),
        "overlap": [
            (
                pu,
                pv,
                lagrange_values(basis, pu.xi),
                lagrange_values(basis, pv.xi),
                _lift_coeff(basis, base, pu),
                _lift_coeff(basis, over, pv),
            )
            for pu, pv in mesh.overlap_points
        ],
    }
    return plan


def _edge(template, j, J, w):
    e = np.zeros_like(template)
    e[j] = 1.0 / (J * w[j])
    return e


def prepared_mesh(mesh, coupling: CouplingConfig):
    """The mesh the operator actually uses (overlap points placed for ``coupling.M``)."""
    if isinstance(mesh, Subdomain) or coupling.mode == "decoupled-exact":
        return mesh
    if len(mesh.overlap_points) != coupling.M:
        return place_overlap_points(mesh, coupling.M)
    return mesh


def state_shapes(mesh, basis: QuadratureBasis, sys: SymmetricSystem):
    subs = (mesh,) if isinstance(mesh, Subdomain) else mesh.subdomains
    return tuple((s.K, basis.size, sys.size) for s in subs)


def external_points(mesh, coupling: CouplingConfig | None = None) -> tuple:
    """Physical points whose external data enter the operator.

    ``(a, d)`` for a single domain and ``(a, d, b, c)`` for overset grids.
    Data at ``b`` and ``c`` is used in decoupled-exact mode, and at an
    overlap boundary with no incoming characteristics, where the donor grid
    supplies nothing.
    """
    if isinstance(mesh, Subdomain):
        return (mesh.x_left, mesh.x_right)
    return (mesh.a, mesh.d, mesh.b, mesh.c)


def external_states(mesh, coupling: CouplingConfig, bc: BoundarySpec, t: float, m: int) -> np.ndarray:
    """External data at :func:`external_points`, shape ``(P, m)``."""
    pts = external_points(mesh, coupling)
    sources = (bc.left, bc.right, bc.interface, bc.interface)
    return np.array([_external(src, x, t, m) for src, x in zip(sources, pts)]).reshape(len(pts), m)


def rhs(mesh, basis: QuadratureBasis, sys: SymmetricSystem, coupling: CouplingConfig, bc: BoundarySpec, state, t: float):
    """Time derivative of a semi-discrete state.

    ``mesh`` is either a :class:`Subdomain` (single domain, coupling ignored)
    or an :class:`OversetMesh`. ``state`` is a tuple of ``(K, N + 1, m)``
    arrays, one per subdomain. Returns a tuple of the same shapes.
    """
    ext = external_states(mesh, coupling, bc, t, sys.size)
    return rhs_with_data(mesh, basis, sys, coupling, state, ext)


def rhs_with_data(mesh, basis, sys, coupling, state, ext):
    """:func:`rhs` with the external states given directly (see :func:`external_states`)."""
    plan = _plan(mesh, basis, sys, coupling)
    shapes = state_shapes(mesh, basis, sys)
    state = tuple(np.asarray(s, dtype=float) for s in state)
    if tuple(s.shape for s in state) != shapes:
        raise ValueError(f"state shapes {[s.shape for s in state]} do not match {list(shapes)}")
    flux = coupling.flux

    if plan.single:
        return (element_rates(state[0], mesh, basis, sys, flux, ext[0], ext[1]),)

    msh = plan.mesh
    U, V = state
    mode = coupling.mode
    U_b = plan.ell_b @ U[msh.point_b.element]
    V_c = plan.ell_c @ V[msh.point_c.element]
    coupled = mode != "decoupled-exact"
    ext_b = U_b if coupled and plan.donor_at_b else ext[2]
    ext_c = V_c if coupled and plan.donor_at_c else ext[3]

    rU = element_rates(U, msh.base, basis, sys, flux, ext[0], ext_c)
    rV = element_rates(V, msh.overset, basis, sys, flux, ext_b, ext[1])
    if mode == "decoupled-exact":
        return rU, rV

    lifts = plan.lifts
    if mode == "penalty":
        gu, gv = coupling.gamma_u, coupling.gamma_v
        Am, Ap = sys.A_minus_abs, sys.A_plus
        U_c = U[-1, -1]
        V_b = V[0, 0]
        rU[msh.point_b.element] -= np.outer(lifts["base_b"], gu * (Am @ (U_b - V_b)))
        rU[-1] -= np.outer(lifts["base_c"], (gu - 1.0) * (Am @ (U_c - V_c)))
        rV[0] -= np.outer(lifts["over_b"], (gv - 1.0) * (Ap @ (V_b - U_b)))
        rV[msh.point_c.element] -= np.outer(lifts["over_c"], gv * (Ap @ (V_c - U_c)))

    if coupling.M > 0 and coupling.epsilon > 0:
        scale = coupling.epsilon / coupling.M
        for pu, pv, lu, lv, cu, cv in lifts["overlap"]:
            diff = lu @ U[pu.element] - lv @ V[pv.element]
            rU[pu.element] -= np.outer(cu, scale * diff)
            rV[pv.element] += np.outer(cv, scale * diff)
    return rU, rV


def flatten(state) -> np.ndarray:
    return np.concatenate([np.asarray(s, dtype=float).ravel() for s in state])


def unflatten(vec, shapes):
    out, pos = [], 0
    for shp in shapes:
        n = int(np.prod(shp))
        out.append(np.asarray(vec[pos : pos + n]).reshape(shp))
        pos += n
    return tuple(out)


def sample_state(mesh, basis: QuadratureBasis, solution: ExactSolution, t: float):
    """Nodal samples of ``solution`` at time ``t`` on every subdomain."""
    subs = (mesh,) if isinstance(mesh, Subdomain) else mesh.subdomains
    return tuple(np.asarray(solution.state(s.node_coordinates(basis), t), dtype=float) for s in subs)


@dataclass
class AdmissibilityReport:
    admissible: bool
    violations: list


def _min_eig(M):
    return float(np.min(np.linalg.eigvalsh(0.5 * (M + M.T))))


def verify_admissibility(sys: SymmetricSystem, coupling: CouplingConfig, tol: float = 1e-10) -> AdmissibilityReport:
    """Check the penalty matrices ``Sigma_u = gamma_u |A-|``, ``Sigma_v = gamma_v A+``.

    ``admissible`` reflects the sufficient bounds ``Sigma_v >= A+/2`` and
    ``Sigma_u >= |A-|``; the remaining checks are reported but not required.
    """
    A = sys.A
    rho = max(sys.spectral_radius, np.finfo(float).tiny)
    thresh = -tol * rho
    Su = coupling.gamma_u * sys.A_minus_abs
    Sv = coupling.gamma_v * sys.A_plus
    eta = coupling.eta
    violations = []
    required_ok = True
    if _min_eig(Sv - 0.5 * sys.A_plus) < thresh:
        violations.append("Sigma_v >= A+/2 fails")
        required_ok = False
    if _min_eig(Su - sys.A_minus_abs) < thresh:
        violations.append("Sigma_u >= |A-| fails")
        required_ok = False
    for name, beta in (("b", eta), ("c", 1.0 - eta)):
        if np.max(np.abs(beta * A + Su - Sv)) > tol * rho:
            violations.append(f"beta A + Sigma_u = Sigma_v fails at {name} (beta={beta:g})")
        if _min_eig(2.0 * Sv - beta * A) < thresh:
            violations.append(f"2 Sigma_v - beta A >= 0 fails at {name} (beta={beta:g})")
    S = Su + Sv
    M_b = np.block([[eta * A + 2 * Su, -S], [-S, -eta * A + 2 * Sv]])
    M_c = np.block([[(1 - eta) * A + 2 * Su, -S], [-S, -(1 - eta) * A + 2 * Sv]])
    if _min_eig(M_b) < thresh:
        violations.append("M_b >= 0 fails")
    if _min_eig(M_c) < thresh:
        violations.append("M_c >= 0 fails")
    return AdmissibilityReport(admissible=required_ok, violations=violations)
