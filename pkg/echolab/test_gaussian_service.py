"""Tests for metaplectic Gaussians, coherent overlaps, matrix elements and Weyl symbols"""
import numpy as np
import pytest
from scipy.linalg import expm

from echolab.classical_flow_service import ClassicalFlowService
from echolab.exceptions import (
    AssumptionViolationError,
    EigenvalueMinusOneError,
    InvalidDimensionError,
)
from echolab.gaussian_service import (
    GaussianState,
    gaussian_overlap,
    matrix_element,
    metaplectic_on_gaussian,
    mw_weyl_symbol,
    mw_weyl_symbol_grid,
    propagate_coherent_leading,
    transform_width,
)
from echolab.models import build_model
from echolab.oracle_service import Grid1D, QuantumOracleService
from echolab.symplectic_core import (
    random_symplectic,
    rotation,
    squeeze,
    standard_J,
    symplectic_geodesic,
)

QUAD_X = np.linspace(-40.0, 40.0, 2 ** 15 + 1)
QUAD_DX = QUAD_X[1] - QUAD_X[0]

oracle = QuantumOracleService()


def _coherent(center):
    return GaussianState(center=np.asarray(center, dtype=float), width=1j * np.eye(1), prefactor=np.pi ** -0.25)


def _explicit_path(F, n_steps=256):
    return symplectic_geodesic(F, n_steps)


def test_identity_keeps_reference_gaussian():
    state = metaplectic_on_gaussian(np.eye(2))
    assert np.allclose(state.width, 1j * np.eye(1))
    assert abs(state.prefactor - np.pi ** -0.25) < 1e-14


def test_rotation_phase():
    """R(rotation(theta)) g = e^{-i theta/2} g"""
    state = metaplectic_on_gaussian(rotation(0.9))
    assert np.allclose(state.width, 1j * np.eye(1), atol=1e-12)
    assert abs(state.prefactor - np.pi ** -0.25 * np.exp(-0.45j)) < 1e-10


def test_squeezed_width_and_norm():
    lam = 0.5
    state = metaplectic_on_gaussian(squeeze(lam))
    assert np.allclose(state.width, 1j * np.exp(-2 * lam) * np.eye(1))
    assert abs(state.norm() - 1.0) < 1e-12


def test_metaplectic_preserves_norm():
    for seed in range(10):
        state = metaplectic_on_gaussian(random_symplectic(2, seed, scale=0.4))
        assert abs(state.norm() - 1.0) < 1e-9


def test_width_composition():
    """The width of R(F2 F1) g equals F2 acting on the width of R(F1) g"""
    for seed in range(10):
        F1 = random_symplectic(2, seed, scale=0.4)
        F2 = random_symplectic(2, seed + 100, scale=0.4)
        direct = transform_width(F2 @ F1, 1j * np.eye(2))
        composed = transform_width(F2, transform_width(F1, 1j * np.eye(2)))
        assert np.allclose(direct, composed, atol=1e-10)


def test_gaussian_state_needs_positive_imaginary_width():
    with pytest.raises(AssumptionViolationError):
        GaussianState(center=np.zeros(2), width=np.eye(1) + 0j, prefactor=1.0)


def test_overlap_values():
    assert gaussian_overlap(np.array([0.4, -0.3]), np.array([0.4, -0.3])) == pytest.approx(1.0)
    assert gaussian_overlap(np.array([2.0, 0.0]), np.zeros(2)) == pytest.approx(np.exp(-1.0))
    expected = np.exp(-0.5 + 0.5j)
    assert abs(gaussian_overlap(np.array([1.0, 0.0]), np.array([0.0, 1.0])) - expected) < 1e-14


def test_overlap_matches_quadrature():
    rng = np.random.default_rng(4)
    for _ in range(5):
        X, Y = rng.normal(size=2), rng.normal(size=2)
        numeric = np.sum(np.conj(_coherent(X).evaluate(QUAD_X)) * _coherent(Y).evaluate(QUAD_X)) * QUAD_DX
        assert abs(numeric - gaussian_overlap(X, Y)) < 1e-10


def test_matrix_element_at_identity_is_overlap():
    rng = np.random.default_rng(8)
    for _ in range(10):
        X, Y = rng.normal(size=2), rng.normal(size=2)
        expected = gaussian_overlap(Y + X / 2, Y - X / 2)
        assert abs(matrix_element(np.eye(2), X, Y) - expected) < 1e-12


def test_matrix_element_squeeze_modulus():
    value = matrix_element(squeeze(1.0), np.zeros(2), np.zeros(2))
    assert abs(abs(value) - np.cosh(1.0) ** -0.5) < 1e-12


def test_matrix_element_bounded():
    rng = np.random.default_rng(2)
    for seed in range(20):
        F = random_symplectic(2, seed, scale=0.8)
        assert abs(matrix_element(F, rng.normal(size=4), rng.normal(size=4))) <= 1.0 + 1e-12


def test_matrix_element_matches_quadrature():
    """<g_{Y+X/2}, R(F) g_{Y-X/2}> against a direct integral of the propagated Gaussian"""
    rng = np.random.default_rng(17)
    for seed in range(20):
        F = random_symplectic(1, seed, scale=0.8)
        path = _explicit_path(F)
        X, Y = rng.normal(size=2), rng.normal(size=2)
        gauss = metaplectic_on_gaussian(F, path=path)
        # R(F) g_Z = T(FZ) R(F) g
        moved = GaussianState(center=F @ (Y - X / 2), width=gauss.width, prefactor=gauss.prefactor)
        bra = _coherent(Y + X / 2).evaluate(QUAD_X)
        numeric = np.sum(np.conj(bra) * moved.evaluate(QUAD_X)) * QUAD_DX
        assert abs(numeric - matrix_element(F, X, Y, path=path)) < 1e-6


def test_matrix_element_dimension_check():
    with pytest.raises(InvalidDimensionError):
        matrix_element(np.eye(2), np.zeros(4), np.zeros(2))


def test_weyl_symbol_examples():
    assert abs(mw_weyl_symbol(np.eye(2), np.array([0.3, 0.2])) - 1.0) < 1e-14
    # 2 det(I + F)^{-1/2} = 1 / cos(pi/4) for a quarter turn
    assert abs(mw_weyl_symbol(rotation(np.pi / 2), np.zeros(2)) - np.sqrt(2.0)) < 1e-10


def test_weyl_symbol_rotation_chirp():
    theta = 0.6
    X = np.array([0.5, -1.0])
    expected = np.exp(-1j * np.tan(theta / 2) * (X @ X)) / np.cos(theta / 2)
    assert abs(mw_weyl_symbol(rotation(theta), X) - expected) < 1e-10


def test_weyl_symbol_minus_identity():
    with pytest.raises(EigenvalueMinusOneError):
        mw_weyl_symbol(-np.eye(2), np.zeros(2))


def test_weyl_symbol_pairs_with_wigner_function():
    """int symbol W_{g_Y} = <g_Y, R(F) g_Y>"""
    grid = Grid1D(-12.0, 12.0, 512, 1.0)
    J = standard_J(1)
    for seed in range(4):
        rng = np.random.default_rng(seed)
        raw = rng.uniform(-0.4, 0.4, size=(2, 2))
        S = 0.5 * (raw + raw.T) + 0.5 * np.eye(2)
        F = expm(J @ S)
        path = [expm(s * J @ S) for s in np.linspace(0.0, 1.0, 257)]
        Y = rng.normal(size=2)
        psi = oracle.discretize_coherent(Y, grid)
        paired = oracle.weyl_expectation(lambda q, p: mw_weyl_symbol_grid(F, q, p, path), psi)
        assert abs(paired - matrix_element(F, np.zeros(2), Y, path=path)) < 1e-4


def test_leading_propagation_is_exact_for_harmonic():
    hbar = 0.1
    model = build_model("harmonic")
    z = np.array([1.0, 0.5])
    times = np.linspace(0.0, 2.0, 201)
    bundle = ClassicalFlowService().evolve(model, z, times)
    grid = Grid1D(-8.0, 8.0, 512, hbar)
    leading = propagate_coherent_leading(bundle, len(times) - 1, hbar, grid)
    exact = oracle.split_step_propagate(model, oracle.discretize_coherent(z, grid), 2.0, n_steps=4000)
    assert abs(exact.inner(leading) - 1.0) < 1e-4
