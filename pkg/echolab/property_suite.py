"""
Property Suite
Randomized invariant checks of the symplectic core: the det V_F lower bound, its equality
case for orthogonal maps, the block determinant identity and the Gamma_F quadratic-form bound
"""
import logging
import time
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from echolab.config import settings
from echolab.symplectic_core import (
    build_GammaF,
    build_VF,
    det_VF_blocks,
    largest_stretch,
    random_orthogonal_symplectic,
    random_symplectic,
    symplecticity_defect,
    unitarity_defect,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    samples: int
    max_violation: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def _samples(samples: int, dims: Sequence[int], seed: int, scale: float):
    """Deterministic (d, F) stream cycling through dims"""
    for i in range(samples):
        d = dims[i % len(dims)]
        yield d, random_symplectic(d, seed + i, scale)


def det_lower_bound(samples: int, dims: Sequence[int], seed: int, scale: float = 1.0) -> PropertyResult:
    """max(1 - |det V_F|) over random symplectic F"""
    start = time.perf_counter()
    worst = -np.inf
    for _, F in _samples(samples, dims, seed, scale):
        worst = max(worst, 1.0 - abs(np.linalg.det(build_VF(F))))
    return PropertyResult("det_V_lower_bound", samples, float(max(worst, 0.0)), settings.TOL_SYMP_ALGEBRA,
                          time.perf_counter() - start)


def det_unit_modulus(samples: int, dims: Sequence[int], seed: int) -> PropertyResult:
    """max | |det V_F| - 1 | over orthogonal-symplectic F"""
    start = time.perf_counter()
    worst = 0.0
    for i in range(samples):
        F = random_orthogonal_symplectic(dims[i % len(dims)], seed + i)
        worst = max(worst, abs(abs(det_VF_blocks(F)) - 1.0))
    return PropertyResult("det_V_unit_modulus", samples, worst, settings.TOL_SYMP_ALGEBRA,
                          time.perf_counter() - start)


def det_strict_excess(samples: int, dims: Sequence[int], seed: int, scale: float = 1.0) -> PropertyResult:
    """
    Non-orthogonal F (|F^T F - I| > 1e-3) must give |det V_F| > 1

    The violation is the count of samples with |det V_F| <= 1.
    """
    start = time.perf_counter()
    checked, failures, smallest = 0, 0, np.inf
    for _, F in _samples(samples, dims, seed, scale):
        if unitarity_defect(F) <= 1e-3:
            continue
        checked += 1
        excess = abs(det_VF_blocks(F)) - 1.0
        smallest = min(smallest, excess)
        failures += int(excess <= 0.0)
    logger.debug(f"Smallest excess |det V_F| - 1 over {checked} non-orthogonal samples: {smallest:.3e}")
    return PropertyResult("det_V_strict_excess", checked, float(failures), 0.0, time.perf_counter() - start)


def det_block_identity(samples: int, dims: Sequence[int], seed: int, scale: float = 1.0) -> PropertyResult:
    """Relative gap between det 1/2(A + D + i(B - C)) and the direct determinant"""
    start = time.perf_counter()
    worst = 0.0
    for _, F in _samples(samples, dims, seed, scale):
        direct = np.linalg.det(build_VF(F))
        worst = max(worst, abs(det_VF_blocks(F) - direct) / max(1.0, abs(direct)))
    return PropertyResult("det_V_block_identity", samples, worst, settings.TOL_SYMP_ALGEBRA,
                          time.perf_counter() - start)


def gamma_quadratic_bound(samples: int, dims: Sequence[int], seed: int, scale: float = 1.0) -> PropertyResult:
    """max over (F, X) of Re(1/4 Gamma_F X.X) + |X|^2 / (2(1 + s_F))"""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for d, F in _samples(samples, dims, seed, scale):
        X = rng.normal(size=2 * d)
        value = (0.25 * build_GammaF(F) @ X @ X).real
        worst = max(worst, value + (X @ X) / (2.0 * (1.0 + largest_stretch(F))))
    return PropertyResult("gamma_quadratic_bound", samples, float(max(worst, 0.0)), settings.TOL_SYMP_ALGEBRA,
                          time.perf_counter() - start)


def generator_symplecticity(samples: int, dims: Sequence[int], seed: int, scale: float = 1.0) -> PropertyResult:
    start = time.perf_counter()
    worst = max(symplecticity_defect(F) / max(1.0, largest_stretch(F)) for _, F in _samples(samples, dims, seed, scale))
    return PropertyResult("random_symplectic_defect", samples, float(worst), settings.TOL_SYMP_ALGEBRA,
                          time.perf_counter() - start)


def run_all(
    samples: int = settings.PROPERTY_SAMPLES,
    dims: Sequence[int] = (1, 2, 3),
    seed: int = settings.DEFAULT_SEED,
    scale: float = 1.0,
    orthogonal_samples: int = 100,
) -> List[PropertyResult]:
    """Every suite with the same seed; results in a fixed order"""
    results = [
        generator_symplecticity(samples, dims, seed, scale),
        det_lower_bound(samples, dims, seed, scale),
        det_unit_modulus(orthogonal_samples, dims, seed),
        det_strict_excess(samples, dims, seed, scale),
        det_block_identity(samples, dims, seed, scale),
        gamma_quadratic_bound(samples, dims, seed, scale),
    ]
    for r in results:
        mark = "✓" if r.passed else "⚠"
        logger.info(f"{mark} {r.name}: {r.samples} samples, max violation {r.max_violation:.3e} "
                    f"(tolerance {r.tolerance:.1e}, {r.seconds:.2f}s)")
    return results
