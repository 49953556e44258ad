"""
Hamiltonian models: H_delta(q, p) = |p|^2/2 + V(q) + delta * W(q)
Built-in potentials are separable sums of one-dimensional profiles
"""
import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional

import numpy as np

from echolab.exceptions import InvalidDimensionError, ModelEvaluationError, UnsupportedModelError


class ModelName(str, enum.Enum):
    FREE = "free"
    HARMONIC = "harmonic"
    QUARTIC = "quartic"
    ANHARMONIC = "anharmonic"
    PENDULUM = "pendulum"
    DOUBLE_WELL = "double_well"


class PerturbationName(str, enum.Enum):
    NONE = "none"
    LINEAR = "linear"        # delta * q
    QUADRATIC = "quadratic"  # delta * q^2
    COSINE = "cosine"        # delta * cos(q)


Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Potential:
    """Separable potential sum_i v(q_i) with its first and second derivatives"""
    name: str
    v: Profile
    dv: Profile
    d2v: Profile
    q_min: float = 0.0          # location of a minimum (seed for turning-point search)
    quadratic: bool = False     # at most quadratic in q
    params: Dict[str, float] = field(default_factory=dict)

    def value(self, q: np.ndarray) -> np.ndarray:
        return np.sum(self.v(q), axis=-1)

    def grad(self, q: np.ndarray) -> np.ndarray:
        return self.dv(q)

    def hess(self, q: np.ndarray) -> np.ndarray:
        return np.diag(self.d2v(q))


def _harmonic(omega: float = 1.0) -> Potential:
    w2 = omega * omega
    return Potential(
        name=ModelName.HARMONIC.value,
        v=lambda q: 0.5 * w2 * q ** 2,
        dv=lambda q: w2 * q,
        d2v=lambda q: w2 * np.ones_like(q),
        quadratic=True,
        params={"omega": omega},
    )


def _free() -> Potential:
    return Potential(
        name=ModelName.FREE.value,
        v=lambda q: np.zeros_like(q),
        dv=lambda q: np.zeros_like(q),
        d2v=lambda q: np.zeros_like(q),
        quadratic=True,
    )


def _quartic() -> Potential:
    return Potential(
        name=ModelName.QUARTIC.value,
        v=lambda q: q ** 4,
        dv=lambda q: 4.0 * q ** 3,
        d2v=lambda q: 12.0 * q ** 2,
    )


def _anharmonic(alpha: float = 0.1) -> Potential:
    return Potential(
        name=ModelName.ANHARMONIC.value,
        v=lambda q: 0.5 * q ** 2 + alpha * q ** 4,
        dv=lambda q: q + 4.0 * alpha * q ** 3,
        d2v=lambda q: 1.0 + 12.0 * alpha * q ** 2,
        params={"alpha": alpha},
    )


def _pendulum() -> Potential:
    return Potential(
        name=ModelName.PENDULUM.value,
        v=lambda q: -np.cos(q),
        dv=lambda q: np.sin(q),
        d2v=lambda q: np.cos(q),
    )


def _double_well() -> Potential:
    # (q^2 - 1)^2 / 4: minima at q = +-1, barrier 1/4 at q = 0
    return Potential(
        name=ModelName.DOUBLE_WELL.value,
        v=lambda q: 0.25 * (q ** 2 - 1.0) ** 2,
        dv=lambda q: q * (q ** 2 - 1.0),
        d2v=lambda q: 3.0 * q ** 2 - 1.0,
        q_min=1.0,
    )


def _linear() -> Potential:
    return Potential(
        name=PerturbationName.LINEAR.value,
        v=lambda q: q,
        dv=lambda q: np.ones_like(q),
        d2v=lambda q: np.zeros_like(q),
        quadratic=True,
    )


def _quadratic() -> Potential:
    return Potential(
        name=PerturbationName.QUADRATIC.value,
        v=lambda q: q ** 2,
        dv=lambda q: 2.0 * q,
        d2v=lambda q: 2.0 * np.ones_like(q),
        quadratic=True,
    )


def _cosine() -> Potential:
    return Potential(
        name=PerturbationName.COSINE.value,
        v=lambda q: np.cos(q),
        dv=lambda q: -np.sin(q),
        d2v=lambda q: -np.cos(q),
    )


POTENTIALS: Dict[str, Callable[..., Potential]] = {
    ModelName.FREE.value: _free,
    ModelName.HARMONIC.value: _harmonic,
    ModelName.QUARTIC.value: _quartic,
    ModelName.ANHARMONIC.value: _anharmonic,
    ModelName.PENDULUM.value: _pendulum,
    ModelName.DOUBLE_WELL.value: _double_well,
}

PERTURBATIONS: Dict[str, Callable[[], Potential]] = {
    PerturbationName.LINEAR.value: _linear,
    PerturbationName.QUADRATIC.value: _quadratic,
    PerturbationName.COSINE.value: _cosine,
}


@dataclass(frozen=True)
class HamiltonianModel:
    """H_delta = H_0 + delta * V on R^{2d}, phase-space points ordered (q_1..q_d, p_1..p_d)"""
    dim: int
    base: Potential
    perturbation: Optional[Potential] = None
    delta: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidDimensionError(f"Model dimension must be >= 1, got {self.dim}")

    @property
    def name(self) -> str:
        if self.perturbation is None:
            return self.base.name
        return f"{self.base.name}+{self.delta:g}*{self.perturbation.name}"

    @property
    def is_quadratic(self) -> bool:
        return self.base.quadratic and (self.perturbation is None or self.perturbation.quadratic)

    def with_delta(self, delta: float) -> "HamiltonianModel":
        return replace(self, delta=delta)

    def unperturbed(self) -> "HamiltonianModel":
        return replace(self, perturbation=None, delta=0.0)

    def _split(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != 2 * self.dim:
            raise InvalidDimensionError(f"Expected phase vector of length {2 * self.dim}, got {X.shape}")
        return X[..., :self.dim], X[..., self.dim:]

    def potential(self, q: np.ndarray) -> np.ndarray:
        """Total potential V(q) + delta W(q); q has trailing axis of length dim"""
        value = self.base.value(q)
        if self.perturbation is not None and self.delta != 0.0:
            value = value + self.delta * self.perturbation.value(q)
        return value

    def potential_on_grid(self, x: np.ndarray) -> np.ndarray:
        """Potential sampled on a 1-D spatial grid"""
        if self.dim != 1:
            raise InvalidDimensionError("Grid potentials are one-dimensional")
        return self.potential(np.asarray(x, dtype=float)[:, None])

    def eval(self, X: np.ndarray) -> float:
        q, p = self._split(X)
        return float(0.5 * np.dot(p, p) + self.potential(q))

    def grad(self, X: np.ndarray) -> np.ndarray:
        q, p = self._split(X)
        dV = self.base.grad(q)
        if self.perturbation is not None and self.delta != 0.0:
            dV = dV + self.delta * self.perturbation.grad(q)
        out = np.concatenate([dV, p])
        if not np.all(np.isfinite(out)):
            raise ModelEvaluationError(f"Non-finite gradient of {self.name} at {X}")
        return out

    def hess(self, X: np.ndarray) -> np.ndarray:
        q, _ = self._split(X)
        d2V = self.base.hess(q)
        if self.perturbation is not None and self.delta != 0.0:
            d2V = d2V + self.delta * self.perturbation.hess(q)
        out = np.block([[d2V, np.zeros((self.dim, self.dim))],
                        [np.zeros((self.dim, self.dim)), np.eye(self.dim)]])
        if not np.all(np.isfinite(out)):
            raise ModelEvaluationError(f"Non-finite Hessian of {self.name} at {X}")
        return out


@dataclass(frozen=True)
class Observable:
    """One-dimensional phase-space observable L(q, p), vectorized over q and p arrays"""
    name: str
    symbol: Callable[[np.ndarray, np.ndarray], np.ndarray]
    position_only: bool = False  # L depends on q alone, so its Weyl quantization is multiplication


def position_observable() -> Observable:
    return Observable("position", lambda q, p: np.asarray(q, dtype=float) + 0.0 * p, position_only=True)


def momentum_observable() -> Observable:
    return Observable("momentum", lambda q, p: np.asarray(p, dtype=float) + 0.0 * q)


def bump_observable(center: float = 1.0, width: float = 0.5) -> Observable:
    """Smooth Gaussian bump exp(-(q - center)^2 / (2 width^2))"""
    return Observable(
        f"bump({center:g},{width:g})",
        lambda q, p: np.exp(-(np.asarray(q, dtype=float) - center) ** 2 / (2.0 * width ** 2)) + 0.0 * p,
        position_only=True,
    )


def energy_observable(model: HamiltonianModel) -> Observable:
    """The symbol p^2/2 + V(q) of a one-dimensional model"""
    if model.dim != 1:
        raise InvalidDimensionError("Energy observables are built for one degree of freedom")

    def symbol(q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        return 0.5 * p ** 2 + model.potential(q[..., None])

    return Observable(f"energy[{model.name}]", symbol)


def build_model(
    name: str,
    params: Optional[Dict[str, float]] = None,
    perturbation: Optional[str] = None,
    delta: float = 0.0,
    dim: int = 1,
) -> HamiltonianModel:
    """Resolve a built-in model by name"""
    if name not in POTENTIALS:
        raise UnsupportedModelError(f"Unknown model '{name}'. Known: {sorted(POTENTIALS)}")
    base = POTENTIALS[name](**(params or {}))
    pert = None
    if perturbation and perturbation != PerturbationName.NONE.value:
        if perturbation not in PERTURBATIONS:
            raise UnsupportedModelError(
                f"Unknown perturbation '{perturbation}'. Known: {sorted(PERTURBATIONS)}"
            )
        pert = PERTURBATIONS[perturbation]()
    return HamiltonianModel(dim=dim, base=base, perturbation=pert, delta=delta)
