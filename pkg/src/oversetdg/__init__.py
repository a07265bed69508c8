"""1-D discontinuous Galerkin spectral element solver and stability analyzer for overset grids."""

from .dgoperator import BoundarySpec, CouplingConfig, rhs, verify_admissibility
from .diagnostics import domain_norm_sq, error_norms, overset_domain_norm
from .hyperbolic import ScalarAdvection, SinusoidalSolution, make_system, wave_system
from .mesh import build_mesh, sinusoid_geometry, uniform_subdomain
from .polybasis import build_basis
from .spectrum import analyze, assemble, pairing_check
from .timeloop import RunConfig, integrate

__all__ = [
    "BoundarySpec",
    "CouplingConfig",
    "RunConfig",
    "ScalarAdvection",
    "SinusoidalSolution",
    "analyze",
    "assemble",
    "build_basis",
    "build_mesh",
    "domain_norm_sq",
    "error_norms",
    "integrate",
    "make_system",
    "overset_domain_norm",
    "pairing_check",
    "rhs",
    "sinusoid_geometry",
    "uniform_subdomain",
    "verify_admissibility",
    "wave_system",
]
