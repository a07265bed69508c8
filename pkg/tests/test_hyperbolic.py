import numpy as np
import pytest
from hypothesis import given, strategies as st

from oversetdg.hyperbolic import (
    ConstantSolution,
    GaussianPulse,
    ScalarAdvection,
    ScalarProfile,
    SinusoidalSolution,
    ZeroSolution,
    central_flux,
    exact_state,
    jacobi_eigh,
    make_system,
    upwind_flux,
    wave_system,
)

finite = st.floats(-10, 10, allow_nan=False)


@st.composite
def symmetric_matrices(draw, max_size=4):
    m = draw(st.integers(1, max_size))
    vals = draw(st.lists(finite, min_size=m * m, max_size=m * m))
    B = np.array(vals).reshape(m, m)
    return B + B.T


def test_wave_splitting_oracle():
    s = wave_system()
    # eigenpairs (+-1, (1, +-1)/sqrt(2)) by hand
    np.testing.assert_allclose(s.A_plus, 0.5 * np.array([[1, 1], [1, 1]]), atol=1e-15)
    np.testing.assert_allclose(s.A_minus_abs, 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-15)
    assert s.spectral_radius == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(s.eigvals, [-1.0, 1.0], atol=1e-15)


def test_positive_multiple_of_identity():
    s = make_system(3.0 * np.eye(3))
    np.testing.assert_allclose(s.A_plus, s.A)
    np.testing.assert_array_equal(s.A_minus_abs, np.zeros((3, 3)))


def test_jacobi_matches_lapack(rng):
    B = rng.standard_normal((4, 4))
    A = B + B.T
    lam, P = jacobi_eigh(A)
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(A), atol=1e-12)
    np.testing.assert_allclose(P.T @ P, np.eye(4), atol=1e-13)


@given(symmetric_matrices())
def test_system_invariants(A):
    s = make_system(A)
    rho = max(s.spectral_radius, 1e-300)
    assert np.array_equal(s.A, s.A.T)
    assert np.max(np.abs(s.eigvecs.T @ s.A @ s.eigvecs - np.diag(s.eigvals)), initial=0) <= 1e-12 * rho
    np.testing.assert_allclose(s.A_plus - s.A_minus_abs, s.A, atol=1e-13 * max(rho, 1))
    np.testing.assert_allclose(s.A_plus + s.A_minus_abs, s.A_abs, atol=1e-13 * max(rho, 1))
    for M in (s.A_plus, s.A_minus_abs):
        assert np.min(np.linalg.eigvalsh(M)) >= -1e-12 * rho


def test_near_zero_eigenvalues_go_to_neither_part():
    s = make_system(np.diag([1.0, 1e-15, -2.0]))
    assert s.A_plus[1, 1] == 0.0 and s.A_minus_abs[1, 1] == 0.0


def test_slightly_asymmetric_input_is_symmetrized():
    A = np.array([[0.0, 1.0], [1.0 + 1e-12, 0.0]])
    s = make_system(A)
    assert np.array_equal(s.A, s.A.T)


@pytest.mark.parametrize("A", [np.ones((2, 3)), [[0.0, 1.0], [0.5, 0.0]], [[np.nan, 0], [0, 1]]])
def test_bad_matrices_rejected(A):
    with pytest.raises(ValueError):
        make_system(A)


def test_scalar_advection():
    assert ScalarAdvection(2.0).system.A[0, 0] == 2.0
    with pytest.raises(ValueError):
        ScalarAdvection(-1.0)
    with pytest.raises(ValueError):
        ScalarAdvection(0.0)


# fluxes


def test_upwind_examples():
    s = wave_system()
    np.testing.assert_allclose(upwind_flux(s, [1.0, 0.0], [0.0, 0.0]), [0.5, 0.5], atol=1e-15)
    sc = ScalarAdvection(1.5).system
    assert upwind_flux(sc, [2.0], [-7.0])[0] == pytest.approx(3.0)


def test_central_examples():
    s = wave_system()
    np.testing.assert_allclose(central_flux(s, [1.0, 0.0], [0.0, 0.0]), [0.0, 0.5])
    sc = ScalarAdvection(2.0).system
    assert central_flux(sc, [1.0], [3.0])[0] == pytest.approx(4.0)


@given(symmetric_matrices(3), st.integers(0, 2**31 - 1))
def test_flux_consistency(A, seed):
    s = make_system(A)
    U = np.random.default_rng(seed).standard_normal(s.size)
    scale = max(1.0, s.spectral_radius)
    np.testing.assert_allclose(upwind_flux(s, U, U), s.A @ U, atol=1e-13 * scale)
    np.testing.assert_allclose(central_flux(s, U, U), s.A @ U, atol=1e-13 * scale)


@given(symmetric_matrices(3), st.integers(0, 2**31 - 1))
def test_upwind_forms_agree(A, seed):
    s = make_system(A)
    UL, UR = np.random.default_rng(seed).standard_normal((2, s.size))
    alt = 0.5 * s.A @ (UL + UR) - 0.5 * s.A_abs @ (UR - UL)
    np.testing.assert_allclose(upwind_flux(s, UL, UR), alt, atol=1e-13 * max(1.0, s.spectral_radius))


@given(symmetric_matrices(3), st.integers(0, 2**31 - 1))
def test_upwind_dissipation_identity(A, seed):
    s = make_system(A)
    UL, UR = np.random.default_rng(seed).standard_normal((2, s.size))
    jump = UR - UL
    lhs = jump @ upwind_flux(s, UL, UR) - 0.5 * (UR @ s.A @ UR - UL @ s.A @ UL)
    rhs_ = -0.5 * jump @ s.A_abs @ jump
    assert lhs == pytest.approx(rhs_, abs=1e-11 * max(1.0, s.spectral_radius))
    assert rhs_ <= 1e-12


@given(finite, finite, finite, finite)
def test_jump_average_identity(pl, pr, ql, qr):
    jump = lambda a, b: b - a
    avg = lambda a, b: 0.5 * (a + b)
    lhs = jump(pl * ql, pr * qr)
    rhs_ = avg(pl, pr) * jump(ql, qr) + jump(pl, pr) * avg(ql, qr)
    assert lhs == pytest.approx(rhs_, abs=1e-10)


def test_fluxes_broadcast(rng):
    s = wave_system()
    UL, UR = rng.standard_normal((2, 5, 2))
    F = upwind_flux(s, UL, UR)
    assert F.shape == (5, 2)
    np.testing.assert_allclose(F[3], upwind_flux(s, UL[3], UR[3]))


def test_flux_dimension_mismatch():
    with pytest.raises(ValueError):
        upwind_flux(wave_system(), [1.0], [1.0])


# exact solutions


def test_exact_state_origin():
    for k in (1.0, 4.0, 7.5):
        np.testing.assert_allclose(exact_state(0.0, 0.0, k), [1.0, 1.0])


@given(st.floats(-5, 5), st.floats(0, 5))
def test_exact_state_periodic(x, t):
    k = 4.0
    np.testing.assert_allclose(exact_state(x + 2 * np.pi / k, t, k), exact_state(x, t, k), atol=1e-12)


@given(st.floats(-5, 5), st.floats(0, 5))
def test_exact_state_pde_residual(x, t):
    k, h = 4.0, 1e-5
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    wt = (exact_state(x, t + h, k) - exact_state(x, t - h, k)) / (2 * h)
    wx = (exact_state(x + h, t, k) - exact_state(x - h, t, k)) / (2 * h)
    assert np.max(np.abs(wt + A @ wx)) < 1e-6


def test_solution_kinds_shapes():
    x = np.linspace(0, 1, 7)
    assert SinusoidalSolution(4.0).state(x, 0.3).shape == (7, 2)
    assert ZeroSolution(3).state(x, 0.0).shape == (7, 3)
    np.testing.assert_array_equal(ConstantSolution((1.0, -2.0)).state(x, 5.0)[4], [1.0, -2.0])
    prof = ScalarProfile(np.sin, alpha=2.0)
    np.testing.assert_allclose(prof.state(x, 0.5)[:, 0], np.sin(x - 1.0))


def test_gaussian_pulse_is_characteristic_solution():
    s = wave_system()
    g = GaussianPulse(s, center=1.0, width=0.2)
    x, t, h = 1.3, 0.4, 1e-5
    wt = (g.state(x, t + h) - g.state(x, t - h)) / (2 * h)
    wx = (g.state(x + h, t) - g.state(x - h, t)) / (2 * h)
    assert np.max(np.abs(wt + s.A @ wx)) < 1e-6
    np.testing.assert_allclose(g.state(1.0, 0.0), [1.0, 1.0], atol=1e-14)
