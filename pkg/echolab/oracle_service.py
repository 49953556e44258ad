"""
Quantum Oracle Service
Exact 1-D reference: grid coherent states, split-operator propagation,
fidelities, spectra, Wigner transforms and Weyl expectations
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import fft
from scipy.linalg import eigh

from echolab.classical_flow_service import ClassicalFlowService, flow_service
from echolab.config import settings
from echolab.echo_service import EchoSeries
from echolab.exceptions import (
    DomainError,
    InvalidDimensionError,
    ResolutionError,
    TruncationError,
    UnsupportedModelError,
)
from echolab.models import HamiltonianModel, Observable
from echolab.revival_service import LadderSource, SpectralLadder, ladder_from_levels

logger = logging.getLogger(__name__)

MAX_POINTS = 2 ** 16
EDGE_FRACTION = 1.0 / 128


@dataclass(frozen=True)
class Grid1D:
    q_min: float
    q_max: float
    n_points: int
    hbar: float

    def __post_init__(self):
        if not self.q_max > self.q_min:
            raise ValueError(f"Empty grid [{self.q_min}, {self.q_max}]")
        if self.n_points < settings.ORACLE_MIN_POINTS or self.n_points & (self.n_points - 1):
            raise ResolutionError(
                f"n_points must be a power of two >= {settings.ORACLE_MIN_POINTS}, got {self.n_points}"
            )
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.q_min + self.spacing * np.arange(self.n_points)

    @property
    def momenta(self) -> np.ndarray:
        """FFT-ordered momentum grid 2 pi hbar k / L"""
        return 2 * np.pi * self.hbar * fft.fftfreq(self.n_points, d=self.spacing)

    @property
    def p_max(self) -> float:
        return np.pi * self.hbar / self.spacing

    def refined(self) -> "Grid1D":
        return Grid1D(self.q_min, self.q_max, 2 * self.n_points, self.hbar)


@dataclass
class GridWavefunction:
    grid: Grid1D
    samples: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.spacing))

    def normalized(self) -> "GridWavefunction":
        return GridWavefunction(self.grid, self.samples / self.norm())

    def inner(self, other: "GridWavefunction") -> complex:
        """<self, other>, antilinear in self"""
        return complex(np.sum(np.conj(self.samples) * other.samples) * self.grid.spacing)

    def density(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def boundary_mass(self) -> float:
        edge = max(2, int(self.grid.n_points * EDGE_FRACTION))
        rho = self.density()
        return float((np.sum(rho[:edge]) + np.sum(rho[-edge:])) * self.grid.spacing)

    def momentum_edge_mass(self, fraction: float = 0.5) -> float:
        """Probability at |p| beyond fraction * p_max"""
        amplitude = fft.fft(self.samples)
        weights = np.abs(amplitude) ** 2
        outside = np.abs(self.grid.momenta) > fraction * self.grid.p_max
        return float(np.sum(weights[outside]) / np.sum(weights))


class QuantumOracleService:
    """Exact grid propagation used as the reference for semiclassical predictions"""

    def __init__(self, flows: Optional[ClassicalFlowService] = None):
        self.flows = flows or flow_service
        self.dt = settings.ORACLE_DT
        self.width_sigmas = settings.ORACLE_WIDTH_SIGMAS
        self.boundary_tol = settings.ORACLE_BOUNDARY_TOL
        self.norm_tol = settings.ORACLE_NORM_TOL
        self.min_points = settings.ORACLE_MIN_POINTS

    # ==================== GRIDS ====================

    def _grid_for(self, q_lo: float, q_hi: float, p_need: float, hbar: float) -> Grid1D:
        # Wigner transforms resolve |p| < p_max / 2, hence the factor 2.5 margin
        length = q_hi - q_lo
        dx = min(np.pi * hbar / (2.5 * p_need), np.sqrt(hbar) / 8)
        n = max(self.min_points, int(2 ** np.ceil(np.log2(length / dx))))
        if n > MAX_POINTS:
            raise ResolutionError(f"Grid needs {n} points (limit {MAX_POINTS})")
        return Grid1D(q_lo, q_hi, n, hbar)

    def auto_grid(
        self,
        models: Sequence[HamiltonianModel],
        z: np.ndarray,
        t_max: float,
        hbar: float,
        n_samples: int = 201,
    ) -> Grid1D:
        """
        Domain around the classical q-range of every model's trajectory, padded by
        ORACLE_WIDTH_SIGMAS packet widths sqrt(hbar s_F)
        """
        z = np.asarray(z, dtype=float)
        times = np.linspace(0.0, max(t_max, 0.0), n_samples) if t_max > 0 else np.array([0.0])
        q_lo, q_hi, p_abs, stretch = z[0], z[0], abs(z[1]), 1.0
        for model in models:
            if model.dim != 1:
                raise InvalidDimensionError("The quantum oracle is one-dimensional")
            bundle = self.flows.evolve(model, z, times)
            q_lo = min(q_lo, float(np.min(bundle.points[:, 0])))
            q_hi = max(q_hi, float(np.max(bundle.points[:, 0])))
            p_abs = max(p_abs, float(np.max(np.abs(bundle.points[:, 1]))))
            stretch = max(stretch, max(float(np.linalg.norm(F, 2)) for F in bundle.stability))
        sigma = np.sqrt(hbar) * stretch
        pad = self.width_sigmas * sigma
        return self._grid_for(q_lo - pad, q_hi + pad, p_abs + pad, hbar)

    # ==================== STATES ====================

    def discretize_coherent(self, z: np.ndarray, grid: Grid1D) -> GridWavefunction:
        """(pi hbar)^{-1/4} exp(-(x - q)^2 / 2 hbar + i p (x - q/2) / hbar), renormalized on the grid"""
        q, p = np.asarray(z, dtype=float)
        hbar = grid.hbar
        if np.sqrt(hbar) / grid.spacing < 8:
            raise ResolutionError(f"Packet width sqrt(hbar)={np.sqrt(hbar):.3g} spans < 8 grid points")
        if abs(p) + 6 * np.sqrt(hbar) > 0.5 * grid.p_max:
            raise ResolutionError(f"Momentum {p:g} is not resolved (p_max={grid.p_max:.3g})")
        x = grid.x
        samples = (np.pi * hbar) ** -0.25 * np.exp(-(x - q) ** 2 / (2 * hbar) + 1j * p * (x - q / 2) / hbar)
        psi = GridWavefunction(grid, samples)
        if psi.boundary_mass() > self.boundary_tol:
            raise DomainError(f"Coherent state at q={q:g} reaches the grid boundary")
        return psi.normalized()

    # ==================== PROPAGATION ====================

    def split_step_propagate(
        self,
        model: HamiltonianModel,
        psi: GridWavefunction,
        t_final: float,
        n_steps: Optional[int] = None,
    ) -> GridWavefunction:
        """
        Strang splitting exp(-i dt V/2hbar) exp(-i dt P^2/2hbar) exp(-i dt V/2hbar)

        Negative t_final propagates backwards.
        """
        if model.dim != 1:
            raise UnsupportedModelError("Split-step propagation is one-dimensional")
        if t_final == 0.0:
            return GridWavefunction(psi.grid, psi.samples.copy())
        grid = psi.grid
        hbar = grid.hbar
        if n_steps is None:
            n_steps = max(1, int(np.ceil(abs(t_final) / self.dt)))
        dt = t_final / n_steps

        potential = model.potential_on_grid(grid.x)
        if not np.all(np.isfinite(potential)):
            raise UnsupportedModelError(f"Potential of {model.name} is not finite on the grid")
        half_kick = np.exp(-0.5j * dt * potential / hbar)
        drift = np.exp(-0.5j * dt * grid.momenta ** 2 / hbar)

        start_norm = psi.norm()
        samples = psi.samples * half_kick
        for step in range(n_steps):
            samples = fft.ifft(drift * fft.fft(samples))
            if step < n_steps - 1:
                samples = samples * half_kick * half_kick
        samples = samples * half_kick

        out = GridWavefunction(grid, samples)
        drift_norm = abs(out.norm() - start_norm)
        if drift_norm > self.norm_tol:
            logger.warning(f"⚠ Norm drift {drift_norm:.3g} during propagation")
        if out.boundary_mass() > self.boundary_tol:
            raise DomainError(
                f"Wavefunction mass {out.boundary_mass():.3g} reached the grid boundary by t={t_final:g}"
            )
        return out

    def _trajectory(self, model, psi, times, n_steps_per_unit=None):
        """Yield the state at each time of an increasing grid starting at 0"""
        current = psi
        previous = 0.0
        for t in times:
            span = t - previous
            if span > 0:
                steps = None if n_steps_per_unit is None else max(1, int(np.ceil(span * n_steps_per_unit)))
                current = self.split_step_propagate(model, current, span, steps)
            previous = t
            yield current

    def exact_fidelity(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        z: np.ndarray,
        times: np.ndarray,
        hbar: float,
        grid: Optional[Grid1D] = None,
        steps_per_unit: Optional[float] = None,
    ) -> EchoSeries:
        """|<U_0(t) phi_z, U_delta(t) phi_z>|^2 per time"""
        times = np.asarray(times, dtype=float)
        grid = grid or self.auto_grid([model0, model_delta], z, float(times[-1]), hbar)
        psi0 = self.discretize_coherent(z, grid)
        values = np.array([
            abs(a.inner(b)) ** 2
            for a, b in zip(
                self._trajectory(model0, psi0, times, steps_per_unit),
                self._trajectory(model_delta, psi0, times, steps_per_unit),
            )
        ])
        nan = np.full(len(times), np.nan)
        return EchoSeries(times, values, nan, nan.copy(), label=f"exact_fidelity[{model_delta.name}]")

    def exact_return_amplitude(
        self,
        model: HamiltonianModel,
        z: np.ndarray,
        times: np.ndarray,
        hbar: float,
        grid: Optional[Grid1D] = None,
        steps_per_unit: Optional[float] = None,
    ) -> EchoSeries:
        """|<phi_z, U(t) phi_z>| per time"""
        times = np.asarray(times, dtype=float)
        grid = grid or self.auto_grid([model], z, float(times[-1]), hbar)
        psi0 = self.discretize_coherent(z, grid)
        values = np.array([abs(psi0.inner(psi)) for psi in self._trajectory(model, psi0, times, steps_per_unit)])
        nan = np.full(len(times), np.nan)
        return EchoSeries(times, values, nan, nan.copy(), label=f"exact_return[{model.name}]")

    def echo_state(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        z: np.ndarray,
        t: float,
        hbar: float,
        grid: Optional[Grid1D] = None,
    ) -> GridWavefunction:
        """U_0(-t) U_delta(t) phi_z"""
        grid = grid or self.auto_grid([model0, model_delta], z, t, hbar)
        psi = self.discretize_coherent(z, grid)
        forward = self.split_step_propagate(model_delta, psi, t)
        return self.split_step_propagate(model0, forward, -t)

    # ==================== SPECTRA ====================

    def grid_for_levels(self, model: HamiltonianModel, hbar: float, E_max: float) -> Grid1D:
        """Grid holding every eigenfunction up to E_max, with room for its classically forbidden tail"""
        V_min = float(model.potential(np.array([model.base.q_min])))
        E_wall = E_max + max(E_max - V_min, 1.0)
        q_lo, q_hi = self.flows.turning_points(model, E_wall)
        pad = 10 * np.sqrt(hbar)
        return self._grid_for(q_lo - pad, q_hi + pad, np.sqrt(2 * (E_wall - V_min)) / 1.25, hbar)

    def eigensolve_1d(
        self,
        model: HamiltonianModel,
        hbar: float,
        k: int,
        grid: Optional[Grid1D] = None,
        ref_energy: Optional[float] = None,
    ) -> SpectralLadder:
        """Lowest k eigenvalues of P^2/2 + V with a Fourier-spectral kinetic matrix"""
        if model.dim != 1:
            raise InvalidDimensionError("Grid spectra are one-dimensional")
        if grid is None:
            raise ValueError("eigensolve_1d needs a grid; see grid_for_levels")
        n = grid.n_points
        if k < 1 or k > n // 4:
            raise TruncationError(f"Cannot resolve {k} levels on {n} points")
        kinetic = fft.ifft(0.5 * grid.momenta[:, None] ** 2 * fft.fft(np.eye(n), axis=0), axis=0).real
        kinetic = 0.5 * (kinetic + kinetic.T)
        potential = model.potential_on_grid(grid.x)
        energies = eigh(kinetic + np.diag(potential), eigvals_only=True, subset_by_index=[0, k - 1])
        wall = min(potential[0], potential[-1])
        if energies[-1] >= wall:
            raise TruncationError(f"Level {k - 1} at E={energies[-1]:.4g} reaches the domain wall V={wall:.4g}")
        logger.info(f"✓ Diagonalized {model.name} on {n} points: {k} levels up to E={energies[-1]:.6g}")
        return ladder_from_levels(energies, hbar, ref_energy, LadderSource.GRID_DIAGONALIZATION)

    # ==================== PHASE SPACE ====================

    @staticmethod
    def wigner(psi: GridWavefunction):
        """
        W(q, p) = 1/(pi hbar) int psi*(q + y) psi(q - y) e^{2ipy/hbar} dy on the grid

        Returns (W, p_axis); W has shape (n_q, n_p) and sums to 1 with weights dx * dp.
        """
        grid = psi.grid
        n = grid.n_points
        dx = grid.spacing
        hbar = grid.hbar
        s = np.arange(-n // 2, n // 2)
        j = np.arange(n)[:, None]
        plus, minus = j + s[None, :], j - s[None, :]
        valid = (plus >= 0) & (plus < n) & (minus >= 0) & (minus < n)
        corr = np.where(
            valid,
            np.conj(psi.samples[np.clip(plus, 0, n - 1)]) * psi.samples[np.clip(minus, 0, n - 1)],
            0.0,
        )
        spectrum = fft.fftshift(fft.ifft(fft.ifftshift(corr, axes=1), axis=1), axes=1)
        W = (dx * n / (np.pi * hbar)) * spectrum.real
        p_axis = np.pi * hbar * s / (n * dx)
        return W, p_axis

    def weyl_expectation(
        self,
        symbol: Callable[[np.ndarray, np.ndarray], np.ndarray],
        psi: GridWavefunction,
    ) -> complex:
        """int symbol(q, p) W_psi(q, p) dq dp"""
        if psi.momentum_edge_mass() > 1e-10:
            raise DomainError("State has momentum content beyond the Wigner grid")
        W, p_axis = self.wigner(psi)
        Q, P = np.meshgrid(psi.grid.x, p_axis, indexing="ij")
        dp = p_axis[1] - p_axis[0]
        return complex(np.sum(symbol(Q, P) * W) * psi.grid.spacing * dp)

    def observable_expectation(self, observable: Observable, psi: GridWavefunction) -> float:
        if observable.position_only:
            x = psi.grid.x
            values = observable.symbol(x, np.zeros_like(x))
            return float(np.sum(values * psi.density()) * psi.grid.spacing)
        return float(self.weyl_expectation(observable.symbol, psi).real)

    @staticmethod
    def expectation_position(psi: GridWavefunction) -> float:
        return float(np.sum(psi.grid.x * psi.density()) * psi.grid.spacing)

    @staticmethod
    def expectation_momentum(psi: GridWavefunction) -> float:
        """<P> = sum_k p_k |psi_k|^2 / sum_k |psi_k|^2 in the Fourier basis"""
        weights = np.abs(fft.fft(psi.samples)) ** 2
        return float(np.sum(psi.grid.momenta * weights) / np.sum(weights))


# Global oracle service instance
oracle_service = QuantumOracleService()
