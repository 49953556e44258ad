"""
Echo Service
Leading-order semiclassical return amplitude and Loschmidt echo (fidelity) from classical data
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from echolab.classical_flow_service import ClassicalFlowService, TrajectoryBundle, flow_service
from echolab.config import settings
from echolab.exceptions import InvalidDimensionError, SingularMatrixError
from echolab.gaussian_service import matrix_element
from echolab.models import HamiltonianModel
from echolab.symplectic_core import build_GammaF, det_VF_blocks, symplectic_form, unitarity_defect

logger = logging.getLogger(__name__)


@dataclass
class EchoSeries:
    """Per-time values of a return amplitude or fidelity with their ingredients"""
    times: np.ndarray
    values: np.ndarray
    prefactors: np.ndarray
    exponents: np.ndarray
    indicators: np.ndarray = None   # sqrt(hbar) |F_t|^3 (1 + |t|)
    caustic: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        n = len(self.times)
        if self.indicators is None:
            self.indicators = np.zeros(n)
        if self.caustic is None:
            self.caustic = np.zeros(n, dtype=bool)

    @property
    def flags(self) -> np.ndarray:
        """Ehrenfest advisory flags"""
        return self.indicators > 1.0


@dataclass(frozen=True)
class RevivalReport:
    holds: bool
    displacement: float
    unitarity_defect: float


class EchoService:
    """Service assembling leading-order echo quantities from trajectory bundles"""

    def __init__(self, flows: Optional[ClassicalFlowService] = None):
        self.flows = flows or flow_service
        self.revival_tol = settings.REVIVAL_TOL

    # ==================== INGREDIENTS ====================

    @staticmethod
    def lambda_matrix(F0: np.ndarray, F: np.ndarray) -> np.ndarray:
        """Lambda = 1/4 F0^{-T} Gamma_F F0^{-1}"""
        F0_inv = np.linalg.inv(F0)
        return 0.25 * F0_inv.T @ build_GammaF(F) @ F0_inv

    @staticmethod
    def beta_phase(zt_delta: np.ndarray, zt_0: np.ndarray) -> float:
        """beta_t = -1/2 sigma(z_t^delta, z_t^0)"""
        return -0.5 * symplectic_form(zt_delta, zt_0)

    def _indicators(self, bundle: TrajectoryBundle, hbar: float) -> np.ndarray:
        return np.array([
            self.flows.ehrenfest_indicator(F, t, hbar) for F, t in zip(bundle.stability, bundle.times)
        ])

    def _warn_flags(self, series: EchoSeries):
        if np.any(series.flags):
            first = float(series.times[np.argmax(series.flags)])
            logger.warning(f"⚠ {series.label}: beyond the Ehrenfest regime from t={first:g}; values are advisory")

    # ==================== RETURN AMPLITUDE ====================

    def return_amplitude(
        self,
        model: HamiltonianModel,
        z: np.ndarray,
        times: np.ndarray,
        hbar: float,
    ) -> EchoSeries:
        """
        r(t, z) = |det V_t|^{-1/2} exp(Re Delta_t / hbar), Delta_t = 1/4 Gamma_{F_t}(z_t - z).(z_t - z)
        """
        z = np.asarray(z, dtype=float)
        bundle = self.flows.evolve(model, z, times)
        n = len(bundle)
        values = np.full(n, np.nan)
        prefactors = np.full(n, np.nan)
        exponents = np.full(n, np.nan)
        caustic = np.zeros(n, dtype=bool)

        for k in range(n):
            F = bundle.stability[k]
            shift = bundle.points[k] - z
            try:
                gamma = build_GammaF(F)
            except SingularMatrixError:
                caustic[k] = True
                logger.warning(f"⚠ Caustic at t={bundle.times[k]:g}")
                continue
            prefactors[k] = abs(det_VF_blocks(F)) ** -0.5
            exponents[k] = float((0.25 * gamma @ shift @ shift).real / hbar)
            values[k] = prefactors[k] * np.exp(exponents[k])

        series = EchoSeries(
            times=bundle.times,
            values=values,
            prefactors=prefactors,
            exponents=exponents,
            indicators=self._indicators(bundle, hbar),
            caustic=caustic,
            label=f"return[{model.name}]",
        )
        self._warn_flags(series)
        return series

    # ==================== FIDELITY ====================

    def _echo_pair(self, model0, model_delta, z, times):
        if model0.dim != model_delta.dim:
            raise InvalidDimensionError("Unperturbed and perturbed models differ in dimension")
        z = np.asarray(z, dtype=float)
        return self.flows.evolve(model0, z, times), self.flows.evolve(model_delta, z, times)

    def fidelity_leading(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        z: np.ndarray,
        times: np.ndarray,
        hbar: float,
    ) -> EchoSeries:
        """
        f(t) = |det V_F|^{-1} exp(2/hbar Re Lambda dz.dz), F = F0^{-1} F_delta, dz = z_t^delta - z_t^0
        """
        b0, bd = self._echo_pair(model0, model_delta, z, times)
        n = len(b0)
        values = np.full(n, np.nan)
        prefactors = np.full(n, np.nan)
        exponents = np.full(n, np.nan)
        indicators = np.zeros(n)
        caustic = np.zeros(n, dtype=bool)

        for k in range(n):
            F0 = b0.stability[k]
            F = np.linalg.solve(F0, bd.stability[k])
            dz = bd.points[k] - b0.points[k]
            try:
                lam = self.lambda_matrix(F0, F)
            except SingularMatrixError:
                caustic[k] = True
                logger.warning(f"⚠ Caustic at t={b0.times[k]:g}")
                continue
            prefactors[k] = 1.0 / abs(det_VF_blocks(F))
            exponents[k] = float(2.0 / hbar * (lam @ dz @ dz).real)
            values[k] = prefactors[k] * np.exp(exponents[k])
            indicators[k] = max(
                self.flows.ehrenfest_indicator(F0, b0.times[k], hbar),
                self.flows.ehrenfest_indicator(bd.stability[k], b0.times[k], hbar),
            )

        series = EchoSeries(
            times=b0.times,
            values=values,
            prefactors=prefactors,
            exponents=exponents,
            indicators=indicators,
            caustic=caustic,
            label=f"fidelity[{model_delta.name}]",
        )
        self._warn_flags(series)
        return series

    def fidelity_amplitude(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        z: np.ndarray,
        times: np.ndarray,
        hbar: float,
    ) -> np.ndarray:
        """
        Leading-order <U_0(t) phi_z, U_delta(t) phi_z>

        e^{i(gamma_delta - gamma_0)/hbar} e^{i beta_t/hbar} <g_{-X}, R(F) g>,
        X = F0^{-1}(z_t^delta - z_t^0) / sqrt(hbar); R(F) follows the path F0_s^{-1} F_delta_s.
        """
        b0, bd = self._echo_pair(model0, model_delta, z, times)
        path: List[np.ndarray] = []
        amplitudes = np.zeros(len(b0), dtype=complex)
        for k in range(len(b0)):
            F0 = b0.stability[k]
            F = np.linalg.solve(F0, bd.stability[k])
            path.append(F)
            X = np.linalg.solve(F0, bd.points[k] - b0.points[k]) / np.sqrt(hbar)
            phase = (bd.action[k] - b0.action[k] + self.beta_phase(bd.points[k], b0.points[k])) / hbar
            amplitudes[k] = np.exp(1j * phase) * matrix_element(F, -X, -0.5 * X, path=path)
        return amplitudes

    def revival_condition(
        self,
        F0: np.ndarray,
        F_delta: np.ndarray,
        zt_delta: np.ndarray,
        zt_0: np.ndarray,
        tol: Optional[float] = None,
    ) -> RevivalReport:
        """Full revival iff z_t^delta = z_t^0 and F0^{-1} F_delta is orthogonal"""
        tol = self.revival_tol if tol is None else tol
        displacement = float(np.linalg.norm(np.asarray(zt_delta) - np.asarray(zt_0)))
        defect = unitarity_defect(np.linalg.solve(F0, F_delta))
        return RevivalReport(holds=displacement <= tol and defect <= tol, displacement=displacement, unitarity_defect=defect)

    def echo_generator(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        t: float,
        X: np.ndarray,
    ) -> float:
        """(H_delta - H_0)(phi_0^t X): symbol of the interaction-picture echo Hamiltonian"""
        moved = self.flows.flow_point(model0, X, t)
        return model_delta.eval(moved) - model0.eval(moved)


# Global echo service instance
echo_service = EchoService()
