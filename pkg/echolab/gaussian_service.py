"""
Gaussian Service
Metaplectic action on the reference Gaussian, coherent-state overlaps,
metaplectic matrix elements between coherent states and the Weyl symbol of R(F)

Phase-space quantities here are in hbar = 1 units; propagate_coherent_leading rescales to hbar.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from echolab.exceptions import (
    AssumptionViolationError,
    CausticError,
    EigenvalueMinusOneError,
    InvalidDimensionError,
    RefinementRequiredError,
    SingularMatrixError,
)
from echolab.config import settings
from echolab.symplectic_core import (
    branch_sqrt_det,
    build_KF,
    build_VF,
    cayley_generator,
    half_dimension,
    standard_J,
    symplectic_form,
    symplectic_geodesic,
)

logger = logging.getLogger(__name__)

MAX_PATH_STEPS = 4096


@dataclass(frozen=True)
class GaussianState:
    """prefactor * exp(i/2 Gamma (x - q).(x - q) + i p.(x - q/2)) in hbar = 1 units"""
    center: np.ndarray
    width: np.ndarray
    prefactor: complex

    def __post_init__(self):
        if np.min(np.linalg.eigvalsh(0.5 * (self.width.imag + self.width.imag.T))) <= 0:
            raise AssumptionViolationError("Im Gamma must be positive definite")

    @property
    def dim(self) -> int:
        return self.width.shape[0]

    def norm(self) -> float:
        # int exp(-Im Gamma x.x) dx = pi^{d/2} det(Im Gamma)^{-1/2}
        d = self.dim
        gram = np.linalg.det(self.width.imag)
        return float(abs(self.prefactor) * (np.pi ** (d / 2) / np.sqrt(gram)) ** 0.5)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Samples on a 1-D grid"""
        if self.dim != 1:
            raise InvalidDimensionError("Grid evaluation is one-dimensional")
        q, p = self.center
        x = np.asarray(x, dtype=float)
        gamma = complex(self.width[0, 0])
        return self.prefactor * np.exp(0.5j * gamma * (x - q) ** 2 + 1j * p * (x - q / 2))


def _continued_root(
    F: np.ndarray,
    path: Optional[Sequence[np.ndarray]],
    build: Callable[[np.ndarray], np.ndarray],
) -> complex:
    """det(build(F))^{-1/2} continued from F = I along the path (or a refined geodesic)"""
    if path is not None:
        return branch_sqrt_det([build(G) for G in path])[-1].value

    n_steps = 64
    while True:
        try:
            geodesic = symplectic_geodesic(F, n_steps)
        except AssumptionViolationError:
            # no real logarithm: principal branch at the endpoint
            logger.debug("No real logarithm for F; using the principal square root")
            return complex(np.linalg.det(build(F))) ** -0.5
        try:
            return branch_sqrt_det([build(G) for G in geodesic])[-1].value
        except RefinementRequiredError:
            if n_steps >= MAX_PATH_STEPS:
                raise
            n_steps *= 4


def _blocks(F: np.ndarray):
    d = half_dimension(F)
    return F[:d, :d], F[:d, d:], F[d:, :d], F[d:, d:]


def transform_width(F: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Width of R(F) applied to exp(i/2 gamma x.x): (C + D gamma)(A + B gamma)^{-1}"""
    A, B, C, D = _blocks(F)
    M = A + B @ gamma
    if abs(np.linalg.det(M)) <= settings.CAUSTIC_TOL:
        raise SingularMatrixError("A + B Gamma is singular")
    out = np.linalg.solve(M.T, (C + D @ gamma).T).T
    return 0.5 * (out + out.T)


def reference_gaussian(d: int) -> GaussianState:
    """g(x) = pi^{-d/4} exp(-|x|^2 / 2)"""
    standard_J(d)
    return GaussianState(center=np.zeros(2 * d), width=1j * np.eye(d), prefactor=np.pi ** (-d / 4))


def metaplectic_on_gaussian(F: np.ndarray, path: Optional[Sequence[np.ndarray]] = None) -> GaussianState:
    """
    R(F) g = pi^{-d/4} det(A + iB)^{-1/2} exp(i/2 Gamma x.x), Gamma = (C + iD)(A + iB)^{-1}

    Args:
        F: symplectic matrix [[A, B], [C, D]]
        path: matrices from I to F fixing the square-root branch

    Returns:
        GaussianState centered at 0
    """
    d = half_dimension(F)
    gamma = transform_width(F, 1j * np.eye(d))
    root = _continued_root(F, path, lambda G: _blocks(G)[0] + 1j * _blocks(G)[1])
    return GaussianState(center=np.zeros(2 * d), width=gamma, prefactor=np.pi ** (-d / 4) * root)


def gaussian_overlap(X: np.ndarray, Y: np.ndarray) -> complex:
    """<g_X, g_Y> = exp(-|X - Y|^2 / 4 + i/2 sigma(X, Y))"""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    diff = X - Y
    return complex(np.exp(-0.25 * diff @ diff + 0.5j * symplectic_form(X, Y)))


def inverse_sqrt_det_V(F: np.ndarray, path: Optional[Sequence[np.ndarray]] = None) -> complex:
    """det(V_F)^{-1/2} continued from F = I"""
    return _continued_root(F, path, build_VF)


def matrix_element(
    F: np.ndarray,
    X: np.ndarray,
    Y: np.ndarray,
    path: Optional[Sequence[np.ndarray]] = None,
) -> complex:
    """
    <g_{Y+X/2}, R(F) g_{Y-X/2}>

    det(V_F)^{-1/2} exp{(K - I)Y.Y + i/2 sigma(Y - KY - K^T Y, X) + 1/4 JKJ X.X}
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    d = half_dimension(F)
    if X.shape != (2 * d,) or Y.shape != (2 * d,):
        raise InvalidDimensionError(f"Phase vectors must have length {2 * d}")
    try:
        K = build_KF(F)
    except SingularMatrixError as e:
        raise CausticError(f"V_F is singular: {e}")
    J = standard_J(d)
    identity = np.eye(2 * d)
    W = Y - K @ Y - K.T @ Y
    cross = complex(W @ J @ X)
    exponent = (K - identity) @ Y @ Y + 0.5j * cross + 0.25 * (J @ K @ J) @ X @ X
    return complex(inverse_sqrt_det_V(F, path) * np.exp(exponent))


def mw_weyl_symbol(
    F: np.ndarray,
    X: np.ndarray,
    path: Optional[Sequence[np.ndarray]] = None,
) -> complex:
    """
    Weyl symbol of R(F): 2^d det(I + F)^{-1/2} exp(-i N X.X), N = J(I - F)(I + F)^{-1}

    The root of det(I + F) is not taken on its own. I + iN = 2 V_F (I + F)^{-1}, so
    2^d det(I + F)^{-1/2} = det(V_F)^{-1/2} det(I + iN)^{1/2}, where the first factor carries the
    continued branch and the second is unambiguous (Re(I + iN) = I).
    """
    X = np.asarray(X, dtype=float)
    d = half_dimension(F)
    if X.shape != (2 * d,):
        raise InvalidDimensionError(f"Phase vector must have length {2 * d}")
    try:
        N = cayley_generator(F)
    except SingularMatrixError:
        raise EigenvalueMinusOneError("F has eigenvalue -1; the Weyl symbol is distributional")
    eigenvalues = np.linalg.eigvals(np.eye(2 * d) + 1j * N)
    prefactor = inverse_sqrt_det_V(F, path) * np.prod(np.sqrt(eigenvalues))
    return complex(prefactor * np.exp(-1j * (N @ X) @ X))


def mw_weyl_symbol_grid(F: np.ndarray, q: np.ndarray, p: np.ndarray, path=None) -> np.ndarray:
    """Symbol sampled on a (q, p) mesh for d = 1"""
    if half_dimension(F) != 1:
        raise InvalidDimensionError("Grid symbols are one-dimensional")
    prefactor = mw_weyl_symbol(F, np.zeros(2), path)
    N = cayley_generator(F)
    quad_form = N[0, 0] * q ** 2 + 2.0 * N[0, 1] * q * p + N[1, 1] * p ** 2
    return prefactor * np.exp(-1j * quad_form)


def propagate_coherent_leading(bundle, k: int, hbar: float, grid):
    """
    Leading-order state e^{i gamma_t/hbar} T(z_t) Lambda_hbar R(F_t) g on a 1-D grid

    Lambda_hbar psi(x) = hbar^{-1/4} psi(x / sqrt(hbar)); the R(F_t) branch follows the
    bundle's own stability path.
    """
    from echolab.oracle_service import GridWavefunction

    if bundle.dim != 1:
        raise InvalidDimensionError("Grid propagation is one-dimensional")
    F = bundle.stability[k]
    gauss = metaplectic_on_gaussian(F, path=list(bundle.stability[:k + 1]))
    q, p = bundle.points[k]
    gamma = complex(gauss.width[0, 0])
    x = grid.x
    samples = (
        np.exp(1j * bundle.action[k] / hbar)
        * hbar ** -0.25
        * gauss.prefactor
        * np.exp(0.5j * gamma * (x - q) ** 2 / hbar + 1j * p * (x - q / 2) / hbar)
    )
    return GridWavefunction(grid=grid, samples=samples)
