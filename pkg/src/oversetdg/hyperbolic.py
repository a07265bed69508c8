"""Constant-coefficient symmetric hyperbolic models, fluxes and exact solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def jacobi_eigh(A, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigvals, eigvecs)`` with eigenvalues ascending and
    ``eigvecs[:, i]`` the unit eigenvector for ``eigvals[i]``.
    """
    a = np.array(A, dtype=float)
    m = a.shape[0]
    v = np.eye(m)
    scale = max(np.max(np.abs(a), initial=0.0), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(m)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:  # pragma: no cover
        raise RuntimeError("Jacobi eigenvalue iteration did not converge")
    lam = np.diag(a).copy()
    order = np.argsort(lam)
    return lam[order], v[:, order]


@dataclass(frozen=True, eq=False)
class SymmetricSystem:
    """``w_t + A w_x = 0`` with ``A`` symmetric, plus its characteristic splitting."""

    A: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    A_plus: np.ndarray
    A_minus_abs: np.ndarray
    A_abs: np.ndarray
    spectral_radius: float

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @property
    def A_minus(self) -> np.ndarray:
        return -self.A_minus_abs


def make_system(A) -> SymmetricSystem:
    """Validate and split a symmetric coefficient matrix.

    Inputs that are symmetric up to ``1e-10`` relative are symmetrized.
    Eigenvalues with ``|lambda| <= 1e-13 rho(A)`` contribute to neither
    ``A+`` nor ``|A-|``.
    """
    A = np.atleast_2d(np.array(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("coefficient matrix has non-finite entries")
    amax = np.max(np.abs(A), initial=0.0)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * amax:
        raise ValueError("coefficient matrix is not symmetric")
    A = 0.5 * (A + A.T)
    lam, P = jacobi_eigh(A)
    rho = float(np.max(np.abs(lam), initial=0.0))
    pos = np.where(lam > 1e-13 * rho, lam, 0.0)
    neg = np.where(lam < -1e-13 * rho, -lam, 0.0)
    A_plus = (P * pos) @ P.T
    A_minus_abs = (P * neg) @ P.T
    A_plus = 0.5 * (A_plus + A_plus.T)
    A_minus_abs = 0.5 * (A_minus_abs + A_minus_abs.T)
    out = SymmetricSystem(
        A=A,
        eigvals=lam,
        eigvecs=P,
        A_plus=A_plus,
        A_minus_abs=A_minus_abs,
        A_abs=A_plus + A_minus_abs,
        spectral_radius=rho,
    )
    for arr in (out.A, out.eigvals, out.eigvecs, out.A_plus, out.A_minus_abs, out.A_abs):
        arr.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScalarAdvection:
    """``w_t + alpha w_x = 0`` with ``alpha > 0``."""

    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"wave speed must be positive, got {self.alpha}")

    @property
    def system(self) -> SymmetricSystem:
        return make_system([[self.alpha]])


WAVE_MATRIX = np.array([[0.0, 1.0], [1.0, 0.0]])


def wave_system() -> SymmetricSystem:
    """The 2x2 system ``A = [[0, 1], [1, 0]]`` used in the computed examples."""
    return make_system(WAVE_MATRIX)


def _check_states(sys: SymmetricSystem, UL, UR):
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    if UL.shape != UR.shape or UL.shape[-1] != sys.size:
        raise ValueError(f"states must have trailing dimension {sys.size}, got {UL.shape} and {UR.shape}")
    return UL, UR


def upwind_flux(sys: SymmetricSystem, UL, UR) -> np.ndarray:
    """``A+ UL + A- UR``. Broadcasts over leading axes of the states."""
    UL, UR = _check_states(sys, UL, UR)
    return UL @ sys.A_plus.T - UR @ sys.A_minus_abs.T


def central_flux(sys: SymmetricSystem, UL, UR) -> np.ndarray:
    UL, UR = _check_states(sys, UL, UR)
    return 0.5 * (UL + UR) @ sys.A.T


FLUXES: dict[str, Callable] = {"upwind": upwind_flux, "central": central_flux}


def exact_state(x, t, k: float) -> np.ndarray:
    """Periodic solution of the 2x2 wave system, shape ``x.shape + (2,)``."""
    x = np.asarray(x, dtype=float)
    c = np.cos(k * (x - t))
    s = np.sin(k * (x + t))
    return np.stack([c + s, c - s], axis=-1)


class ExactSolution:
    """Space-time solution used for initial data, boundary data and errors."""

    size: int

    def state(self, x, t) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class SinusoidalSolution(ExactSolution):
    k: float = 4.0
    size: int = field(default=2, init=False)

    def state(self, x, t):
        return exact_state(x, t, self.k)


@dataclass(frozen=True)
class ZeroSolution(ExactSolution):
    size: int = 1

    def state(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (self.size,))


@dataclass(frozen=True)
class ConstantSolution(ExactSolution):
    value: tuple = (1.0,)

    @property
    def size(self):
        return len(self.value)

    def state(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.value, dtype=float), x.shape + (self.size,)).copy()


@dataclass(frozen=True)
class ScalarProfile(ExactSolution):
    """``w(x, t) = profile(x - alpha t)`` for scalar advection."""

    profile: Callable
    alpha: float = 1.0
    size: int = field(default=1, init=False)

    def state(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.profile(x - self.alpha * t), dtype=float)[..., None] * np.ones(1)


@dataclass(frozen=True, eq=False)
class GaussianPulse(ExactSolution):
    """Gaussian initial data split into characteristic waves.

    Exact for the whole-line problem; it also solves the bounded problem with
    zero characteristic data as long as the tails stay negligible at the
    inflow boundaries.
    """

    system: SymmetricSystem
    center: float
    width: float
    amplitude: tuple = None

    @property
    def size(self):
        return self.system.size

    def state(self, x, t):
        x = np.asarray(x, dtype=float)
        amp = np.ones(self.size) if self.amplitude is None else np.asarray(self.amplitude, dtype=float)
        out = np.zeros(x.shape + (self.size,))
        P = self.system.eigvecs
        for lam, p in zip(self.system.eigvals, P.T):
            profile = np.exp(-(((x - lam * t - self.center) / self.width) ** 2))
            out += profile[..., None] * (p * (p @ amp))
        return out
