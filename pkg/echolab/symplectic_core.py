"""
Symplectic Core - matrix algebra shared by every semiclassical formula
Builds J, V_F, K_F, Gamma_F and continues square roots of determinants along paths
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from echolab.config import settings
from echolab.exceptions import (
    AssumptionViolationError,
    CausticError,
    InvalidDimensionError,
    RefinementRequiredError,
    SingularMatrixError,
)

logger = logging.getLogger(__name__)

# A symplectic matrix is a real (2d, 2d) ndarray with F^T J F = J.
SympMatrix = np.ndarray
# Complex square matrix (V_F, K_F, Gamma_F, Lambda).
ComplexMat = np.ndarray


@dataclass(frozen=True)
class BranchedRoot:
    """det^{-1/2} continued along a path; winding counts half-turns of det's phase"""
    value: complex
    winding: int
    phase: float = 0.0  # unwrapped arg(det) at this step

    def determinant(self) -> complex:
        return 1.0 / (self.value * self.value)


def half_dimension(F: np.ndarray) -> int:
    """Return d for a (2d, 2d) matrix"""
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise InvalidDimensionError(f"Expected a square matrix, got shape {F.shape}")
    if F.shape[0] == 0 or F.shape[0] % 2:
        raise InvalidDimensionError(f"Phase-space matrices need even dimension, got {F.shape[0]}")
    return F.shape[0] // 2


def standard_J(d: int) -> np.ndarray:
    """Block matrix [[0, I_d], [-I_d, 0]]"""
    if d < 1:
        raise InvalidDimensionError(f"Dimension must be >= 1, got {d}")
    identity = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, identity], [-identity, zero]])


def symplectic_form(X: np.ndarray, Y: np.ndarray) -> float:
    """sigma(X, Y) = X . J Y"""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 1 or X.size % 2:
        raise InvalidDimensionError(f"Incompatible phase vectors {X.shape} and {Y.shape}")
    d = X.size // 2
    return float(X[:d] @ Y[d:] - X[d:] @ Y[:d])


def symplecticity_defect(F: np.ndarray) -> float:
    """max-norm of F^T J F - J"""
    d = half_dimension(F)
    J = standard_J(d)
    return float(np.max(np.abs(F.T @ J @ F - J)))


def is_symplectic(F: np.ndarray, tol: float = settings.TOL_SYMP_ALGEBRA) -> bool:
    return symplecticity_defect(np.asarray(F, dtype=float)) <= tol


def unitarity_defect(F: np.ndarray) -> float:
    """max-norm of F^T F - I (zero exactly for orthogonal-symplectic F)"""
    F = np.asarray(F, dtype=float)
    return float(np.max(np.abs(F.T @ F - np.eye(F.shape[0]))))


def largest_stretch(F: np.ndarray) -> float:
    """s_F: the largest eigenvalue of F^T F"""
    F = np.asarray(F, dtype=float)
    return float(np.linalg.eigvalsh(F.T @ F)[-1])


def random_symplectic(d: int, seed: int, scale: float = 1.0) -> SympMatrix:
    """
    exp(J S) with S symmetric, entries uniform in [-scale, scale]

    Small scale stays near the identity, large scale reaches strongly hyperbolic maps.
    """
    if scale < 0:
        raise ValueError(f"scale must be non-negative, got {scale}")
    J = standard_J(d)
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-scale, scale, size=(2 * d, 2 * d))
    S = np.triu(raw) + np.triu(raw, 1).T
    return expm(J @ S)


def random_orthogonal_symplectic(d: int, seed: int) -> SympMatrix:
    """[[A, B], [-B, A]] with A + iB a random unitary: orthogonal and symplectic"""
    standard_J(d)
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    hermitian = (raw + raw.conj().T) / 2
    U = expm(1j * hermitian)
    A, B = U.real, U.imag
    return np.block([[A, B], [-B, A]])


def rotation(theta: float) -> SympMatrix:
    """Harmonic-oscillator flow map for d=1: q -> q cos + p sin"""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def squeeze(lam: float) -> SympMatrix:
    """diag(e^lam, e^-lam) for d=1"""
    return np.diag([np.exp(lam), np.exp(-lam)])


def build_VF(F: SympMatrix) -> ComplexMat:
    """V_F = 1/2 (I + F + iJ(I - F))"""
    d = half_dimension(F)
    J = standard_J(d)
    identity = np.eye(2 * d)
    return 0.5 * (identity + F + 1j * J @ (identity - F))


def det_VF_blocks(F: SympMatrix) -> complex:
    """det V_F through the d x d block identity det 1/2 (A + D + i(B - C))"""
    d = half_dimension(F)
    A, B = F[:d, :d], F[:d, d:]
    C, D = F[d:, :d], F[d:, d:]
    return complex(np.linalg.det(0.5 * (A + D + 1j * (B - C))))


def _solve_right(M: np.ndarray, V2: np.ndarray) -> np.ndarray:
    """M (V2)^{-1} via a linear solve on the transpose"""
    if abs(np.linalg.det(V2)) <= settings.CAUSTIC_TOL:
        raise SingularMatrixError("2 V_F is singular")
    return np.linalg.solve(V2.T, M.T).T


def build_KF(F: SympMatrix) -> ComplexMat:
    """K_F = (I + F)(2 V_F)^{-1}"""
    d = half_dimension(F)
    identity = np.eye(2 * d)
    return _solve_right((identity + F).astype(complex), 2.0 * build_VF(F))


def build_GammaF(F: SympMatrix) -> ComplexMat:
    """Gamma_F = (I + iJ)(I + F)(2 V_F)^{-1}(I - iJ) - I, complex symmetric"""
    d = half_dimension(F)
    J = standard_J(d)
    identity = np.eye(2 * d)
    K = build_KF(F)
    return (identity + 1j * J) @ K @ (identity - 1j * J) - identity


def cayley_generator(F: SympMatrix) -> np.ndarray:
    """N = J (I - F)(I + F)^{-1}, real symmetric when det(I + F) != 0"""
    d = half_dimension(F)
    J = standard_J(d)
    identity = np.eye(2 * d)
    plus = identity + F
    if abs(np.linalg.det(plus)) <= settings.CAUSTIC_TOL:
        raise SingularMatrixError("I + F is singular")
    N = J @ np.linalg.solve(plus.T, (identity - F).T).T
    return 0.5 * (N + N.T)


def branch_sqrt_det(
    path: Sequence[np.ndarray],
    max_step: Optional[float] = None,
    caustic_tol: Optional[float] = None,
) -> List[BranchedRoot]:
    """
    Continue det(M)^{-1/2} along a path of matrices starting at det = 1

    Args:
        path: matrices (or complex scalars treated as 1x1 determinants)
        max_step: largest allowed |det_k / det_{k-1} - 1|
        caustic_tol: |det| below this is a caustic

    Returns:
        One BranchedRoot per path entry, value continuous along the path
    """
    max_step = settings.BRANCH_MAX_STEP if max_step is None else max_step
    caustic_tol = settings.CAUSTIC_TOL if caustic_tol is None else caustic_tol

    dets = [complex(np.linalg.det(np.atleast_2d(M))) for M in path]
    if not dets:
        return []
    if abs(dets[0] - 1.0) > 1e-8:
        raise AssumptionViolationError(f"Continuation must start at det = 1, got {dets[0]}")

    roots = [BranchedRoot(value=1.0 + 0j, winding=0, phase=0.0)]
    sqrt_det = 1.0 + 0j
    phase = 0.0
    for k in range(1, len(dets)):
        if abs(dets[k]) <= caustic_tol:
            raise CausticError("Determinant vanishes on the continuation path", index=k)
        ratio = dets[k] / dets[k - 1]
        if abs(ratio - 1.0) >= max_step:
            raise RefinementRequiredError(
                f"Determinant changes by {abs(ratio - 1.0):.3g} in one step", index=k
            )
        # principal root of a ratio close to 1 keeps the branch
        sqrt_det *= np.sqrt(ratio)
        phase += float(np.angle(ratio))
        half_turns = int(np.sign(phase) * np.floor(abs(phase) / np.pi + 1e-9))
        roots.append(BranchedRoot(value=1.0 / sqrt_det, winding=half_turns, phase=phase))
    return roots


def continued_inverse_sqrt_det(path: Sequence[np.ndarray]) -> complex:
    """Final det^{-1/2} of a continuation path, refining nothing"""
    return branch_sqrt_det(path)[-1].value


def symplectic_geodesic(F: SympMatrix, n_steps: int = 64) -> List[SympMatrix]:
    """
    Path t -> exp(t log F), t in [0, 1], from I to F

    Used to fix square-root branches when only the endpoint F is known.
    Falls back to the principal logarithm, so F must not have negative real eigenvalues.
    """
    from scipy.linalg import logm

    generator = logm(np.asarray(F, dtype=float))
    if np.max(np.abs(generator.imag)) > 1e-8:
        raise AssumptionViolationError("F has no real logarithm; supply an explicit path")
    generator = generator.real
    return [expm(s * generator) for s in np.linspace(0.0, 1.0, n_steps + 1)]
