"""
Scenario Schemas
Pydantic models for the TOML scenario file; unknown keys are rejected
"""
import enum
import inspect
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from echolab.config import settings
from echolab.models import POTENTIALS, ModelName, PerturbationName
from echolab.revival_service import CutoffName, LadderSource


class ExperimentKind(str, enum.Enum):
    FIDELITY = "fidelity"
    RETURN = "return"
    REVIVAL = "revival"
    CONVERGENCE = "convergence"
    EGOROV = "egorov"
    PROPERTY_CHECK = "property-check"


class ObservableName(str, enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"
    BUMP = "bump"
    ENERGY = "energy"


# Experiments that need the one-dimensional grid oracle
ORACLE_EXPERIMENTS = {ExperimentKind.CONVERGENCE, ExperimentKind.EGOROV}


class StrictModel(BaseModel):
    class Config:
        extra = "forbid"


# Model schemas
class ModelSection(StrictModel):
    name: ModelName
    params: Dict[str, float] = Field(default_factory=dict)
    dim: int = Field(1, ge=1, le=3)

    @model_validator(mode="after")
    def check_params(self):
        accepted = set(inspect.signature(POTENTIALS[self.name.value]).parameters)
        unknown = sorted(set(self.params) - accepted)
        if unknown:
            raise ValueError(f"model '{self.name.value}' has no parameter(s) {unknown}; accepted: {sorted(accepted)}")
        return self


class PerturbationSection(StrictModel):
    name: PerturbationName = PerturbationName.NONE
    delta: float = 0.0


class ObservableSection(StrictModel):
    name: ObservableName = ObservableName.BUMP
    center: float = 1.0
    width: float = Field(0.5, gt=0)


# Time grid schemas
class TimesSection(StrictModel):
    t_max: Optional[float] = Field(None, gt=0)
    n_samples: Optional[int] = Field(None, ge=2)
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_form(self):
        ranged = self.t_max is not None or self.n_samples is not None
        if ranged and self.values is not None:
            raise ValueError("give either t_max/n_samples or values, not both")
        if ranged and (self.t_max is None or self.n_samples is None):
            raise ValueError("t_max and n_samples go together")
        if not ranged and self.values is None:
            raise ValueError("no time grid given")
        if self.values is not None:
            if len(self.values) == 0:
                raise ValueError("values is empty")
            if self.values[0] < 0 or np.any(np.diff(self.values) <= 0):
                raise ValueError("values must be non-negative and strictly increasing")
        return self

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(0.0, self.t_max, self.n_samples)


class RevivalSection(StrictModel):
    window: Tuple[float, float]
    center_energy: Optional[float] = None
    theta: float = Field(settings.DEFAULT_THETA, gt=0, lt=1)
    theta_prime: float = Field(settings.DEFAULT_THETA_PRIME, gt=0, lt=1)
    delta1: float = Field(0.1, gt=0)
    delta2: float = Field(0.1, gt=0)
    source: LadderSource = LadderSource.GRID_DIAGONALIZATION
    chi1: CutoffName = CutoffName.GAUSSIAN
    use_chi0: bool = True
    index_form: bool = False

    @field_validator("source")
    @classmethod
    def check_source(cls, value):
        if value == LadderSource.EXPLICIT_FORMULA:
            raise ValueError("scenarios build ladders by bohr_sommerfeld or grid_diagonalization")
        return value

    @model_validator(mode="after")
    def check_ordering(self):
        if not self.window[0] < self.window[1]:
            raise ValueError(f"empty energy window {list(self.window)}")
        if not self.theta_prime < self.theta:
            raise ValueError(f"need theta_prime < theta, got {self.theta_prime} >= {self.theta}")
        if self.center_energy is not None and not self.window[0] <= self.center_energy <= self.window[1]:
            raise ValueError(f"center_energy {self.center_energy} outside the window")
        return self

    @property
    def center(self) -> float:
        if self.center_energy is not None:
            return self.center_energy
        return 0.5 * (self.window[0] + self.window[1])


# Oracle and property-suite schemas
class OracleSection(StrictModel):
    enabled: bool = True
    q_min: Optional[float] = None
    q_max: Optional[float] = None
    n_points: Optional[int] = Field(None, ge=settings.ORACLE_MIN_POINTS)
    steps_per_unit: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def check_grid(self):
        given = [v is not None for v in (self.q_min, self.q_max, self.n_points)]
        if any(given) and not all(given):
            raise ValueError("q_min, q_max and n_points go together")
        if all(given):
            if not self.q_min < self.q_max:
                raise ValueError("q_min must be below q_max")
            if self.n_points & (self.n_points - 1):
                raise ValueError(f"n_points must be a power of two, got {self.n_points}")
        return self

    @property
    def has_grid(self) -> bool:
        return self.n_points is not None


class PropertySection(StrictModel):
    samples: int = Field(settings.PROPERTY_SAMPLES, ge=1)
    dims: List[int] = Field(default_factory=lambda: [1, 2, 3])
    scale: float = Field(1.0, gt=0)
    orthogonal_samples: int = Field(100, ge=1)

    @field_validator("dims")
    @classmethod
    def check_dims(cls, value):
        if not value or any(d < 1 for d in value):
            raise ValueError("dims must be a non-empty list of positive integers")
        return value


class OutputSection(StrictModel):
    directory: Optional[str] = None
    table: Optional[str] = None
    plot: bool = False


# Scenario schema
class Scenario(StrictModel):
    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    experiment: ExperimentKind
    seed: int = settings.DEFAULT_SEED
    model0: Optional[ModelSection] = None
    perturbation: PerturbationSection = Field(default_factory=PerturbationSection)
    observable: ObservableSection = Field(default_factory=ObservableSection)
    z0: List[float] = Field(default_factory=lambda: [1.0, 0.0])
    hbar: Union[float, List[float]] = 0.01
    times: Optional[TimesSection] = None
    revival: Optional[RevivalSection] = None
    oracle: OracleSection = Field(default_factory=OracleSection)
    properties: PropertySection = Field(default_factory=PropertySection)
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("hbar")
    @classmethod
    def check_hbar(cls, value):
        values = value if isinstance(value, list) else [value]
        if not values:
            raise ValueError("hbar sweep is empty")
        if any(h <= 0 for h in values):
            raise ValueError("hbar must be positive")
        return value

    @model_validator(mode="after")
    def check_experiment(self):
        kind = self.experiment
        if kind == ExperimentKind.PROPERTY_CHECK:
            return self
        if self.model0 is None:
            raise ValueError(f"experiment '{kind.value}' needs a [model0] section")
        dim = self.model0.dim
        if len(self.z0) != 2 * dim:
            raise ValueError(f"z0 must have {2 * dim} entries for dim={dim}, got {len(self.z0)}")
        if kind == ExperimentKind.REVIVAL:
            if self.revival is None:
                raise ValueError("experiment 'revival' needs a [revival] section")
            if dim != 1:
                raise ValueError("revivals are one-dimensional")
        elif self.times is None:
            raise ValueError(f"experiment '{kind.value}' needs a [times] section")
        elif self.times.grid()[0] != 0.0:
            raise ValueError("time grids for trajectories start at t = 0")
        if kind in ORACLE_EXPERIMENTS and dim != 1:
            raise ValueError(f"experiment '{kind.value}' uses the 1-D oracle; dim must be 1")
        if kind == ExperimentKind.CONVERGENCE and len(self.hbar_values) < 2:
            raise ValueError("convergence needs an hbar sweep with at least two values")
        if kind in ORACLE_EXPERIMENTS and not self.oracle.enabled:
            raise ValueError(f"experiment '{kind.value}' cannot run with the oracle disabled")
        return self

    @property
    def hbar_values(self) -> List[float]:
        return list(self.hbar) if isinstance(self.hbar, list) else [float(self.hbar)]
