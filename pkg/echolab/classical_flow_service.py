"""
Classical Flow Service
Integrates Hamilton's equations together with the stability matrix and the action phase,
computes 1-D action integrals and periods, and evaluates the classical echo map
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq, minimize_scalar

from echolab.config import settings
from echolab.exceptions import (
    IntegrationFailureError,
    InvalidDimensionError,
    NonConfiningError,
    SingularOrbitError,
)
from echolab.models import HamiltonianModel, Observable
from echolab.symplectic_core import standard_J, symplecticity_defect

logger = logging.getLogger(__name__)

# scipy rejects brentq rtol below 4 eps
BRENT_RTOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class IntegratorOptions:
    method: str
    rtol: float
    atol: float

    @classmethod
    def from_settings(cls) -> "IntegratorOptions":
        return cls(
            method=settings.INTEGRATOR_METHOD,
            rtol=settings.INTEGRATOR_RTOL,
            atol=settings.INTEGRATOR_ATOL,
        )


@dataclass(frozen=True)
class TrajectoryBundle:
    """z_t, F_t, gamma_t and H(z_t) sampled on a time grid"""
    times: np.ndarray        # (n,)
    points: np.ndarray       # (n, 2d)
    stability: np.ndarray    # (n, 2d, 2d)
    action: np.ndarray       # (n,)
    energy: np.ndarray       # (n,)
    lyapunov_estimate: float
    symplecticity_defect: float
    energy_drift: float

    @property
    def dim(self) -> int:
        return self.points.shape[1] // 2

    def __len__(self) -> int:
        return len(self.times)


class ClassicalFlowService:
    """Service for classical trajectories, stability matrices and 1-D orbit integrals"""

    def __init__(self):
        self.options = IntegratorOptions.from_settings()
        self.tol_symp = settings.TOL_SYMP_FLOW
        self.tol_energy = settings.TOL_ENERGY
        self.quad_rtol = settings.QUADRATURE_RTOL

    # ==================== TRAJECTORIES ====================

    def _solve(self, rhs, y0: np.ndarray, t_end: float, t_eval, options: IntegratorOptions):
        try:
            sol = solve_ivp(
                rhs,
                (0.0, t_end),
                y0,
                method=options.method,
                t_eval=t_eval,
                rtol=options.rtol,
                atol=options.atol,
            )
        except FloatingPointError as e:
            raise IntegrationFailureError(str(e), last_time=0.0)
        if not sol.success:
            last = float(sol.t[-1]) if len(sol.t) else 0.0
            raise IntegrationFailureError(f"Integrator stopped: {sol.message}", last_time=last)
        return sol

    def evolve(
        self,
        model: HamiltonianModel,
        z0: np.ndarray,
        times: np.ndarray,
        options: Optional[IntegratorOptions] = None,
    ) -> TrajectoryBundle:
        """
        Jointly integrate z' = J grad H(z), F' = J H''(z) F and the action phase

        gamma_t = 1/2 int_0^t z_s . grad H(z_s) ds - t H(z_0)

        Args:
            model: Hamiltonian
            z0: initial phase-space point, length 2d
            times: increasing grid starting at 0
            options: integrator overrides

        Returns:
            TrajectoryBundle on the requested grid
        """
        options = options or self.options
        z0 = np.asarray(z0, dtype=float)
        times = np.asarray(times, dtype=float)
        d = model.dim
        n = 2 * d
        if z0.shape != (n,):
            raise InvalidDimensionError(f"Initial point must have length {n}, got {z0.shape}")
        if times.ndim != 1 or len(times) == 0 or times[0] != 0.0:
            raise ValueError("Time grid must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Time grid must be strictly increasing")

        J = standard_J(d)
        E0 = model.eval(z0)

        def rhs(_t, y):
            z = y[:n]
            F = y[n:n + n * n].reshape(n, n)
            g = model.grad(z)
            dz = J @ g
            dF = J @ model.hess(z) @ F
            dgamma = 0.5 * float(z @ g) - E0
            return np.concatenate([dz, dF.ravel(), [dgamma]])

        y0 = np.concatenate([z0, np.eye(n).ravel(), [0.0]])
        if len(times) == 1:
            ys = y0[:, None]
        else:
            ys = self._solve(rhs, y0, float(times[-1]), times, options).y

        points = ys[:n].T.copy()
        stability = ys[n:n + n * n].T.reshape(len(times), n, n).copy()
        action = ys[-1].copy()
        points[0] = z0
        stability[0] = np.eye(n)
        action[0] = 0.0
        energy = np.array([model.eval(z) for z in points])

        defect = max(symplecticity_defect(F) for F in stability)
        drift = float(np.max(np.abs(energy - energy[0])))
        t_final = float(times[-1])
        lyapunov = float(np.log(np.linalg.norm(stability[-1], 2)) / t_final) if t_final > 0 else 0.0

        if defect > self.tol_symp:
            logger.warning(f"⚠ Stability matrix symplecticity defect {defect:.3g} exceeds {self.tol_symp:g}")
        if drift > self.tol_energy * max(1.0, abs(energy[0])):
            logger.warning(f"⚠ Energy drift {drift:.3g} exceeds {self.tol_energy:g}")

        return TrajectoryBundle(
            times=times,
            points=points,
            stability=stability,
            action=action,
            energy=energy,
            lyapunov_estimate=lyapunov,
            symplecticity_defect=float(defect),
            energy_drift=drift,
        )

    def flow_point(
        self,
        model: HamiltonianModel,
        X: np.ndarray,
        t: float,
        options: Optional[IntegratorOptions] = None,
    ) -> np.ndarray:
        """phi^t(X) for either sign of t"""
        options = options or self.options
        X = np.asarray(X, dtype=float)
        if t == 0.0:
            return X.copy()
        J = standard_J(model.dim)

        def rhs(_t, z):
            return J @ model.grad(z)

        sol = self._solve(rhs, X, float(t), None, options)
        return sol.y[:, -1]

    def classical_echo(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        X: np.ndarray,
        t: float,
        options: Optional[IntegratorOptions] = None,
    ) -> np.ndarray:
        """phi_0^{-t} o phi_delta^t (X)"""
        forward = self.flow_point(model_delta, X, t, options)
        return self.flow_point(model0, forward, -t, options)

    # ==================== 1-D ORBIT INTEGRALS ====================

    def _potential_1d(self, model: HamiltonianModel):
        if model.dim != 1:
            raise InvalidDimensionError("Action integrals are defined for one degree of freedom")
        return lambda q: float(model.potential(np.array([q])))

    def turning_points(
        self,
        model: HamiltonianModel,
        E: float,
        bracket: Optional[Tuple[float, float]] = None,
    ) -> Tuple[float, float]:
        """Roots q_- < q_+ of V(q) = E around the well seeded at the model's minimum"""
        V = self._potential_1d(model)
        q0 = model.base.q_min
        if V(q0) >= E:
            raise NonConfiningError(f"Energy {E:g} lies below the well bottom V({q0:g}) = {V(q0):g}")

        def outward(direction: float) -> float:
            if bracket is not None:
                edge = bracket[0] if direction < 0 else bracket[1]
                if V(edge) < E:
                    raise NonConfiningError(f"No turning point inside the search interval {bracket}")
                return brentq(lambda q: V(q) - E, min(q0, edge), max(q0, edge), xtol=1e-15, rtol=BRENT_RTOL)
            step = 1e-3
            prev = q0
            while step < 1e6:
                cur = q0 + direction * step
                if V(cur) >= E:
                    a, b = (cur, prev) if direction < 0 else (prev, cur)
                    return brentq(lambda q: V(q) - E, a, b, xtol=1e-15, rtol=BRENT_RTOL)
                prev = cur
                step *= 1.2
            raise NonConfiningError(f"Orbit at energy {E:g} is not bounded")

        q_minus, q_plus = outward(-1.0), outward(1.0)
        for q in (q_minus, q_plus):
            slope = float(model.grad(np.array([q, 0.0]))[0])
            if abs(slope) < 1e-10:
                raise SingularOrbitError(f"Energy {E:g} is a critical value (V'({q:g}) = 0)")

        # a barrier top inside the orbit at height E means a separatrix
        samples = np.linspace(q_minus, q_plus, 2001)
        values = np.asarray(model.potential(samples[:, None]), dtype=float)
        peaks = np.where((values[1:-1] >= values[:-2]) & (values[1:-1] >= values[2:]))[0] + 1
        for k in peaks:
            top = minimize_scalar(lambda q: -V(q), bounds=(samples[k - 1], samples[k + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if abs(-top.fun - E) <= 1e-9 * max(1.0, abs(E)):
                raise SingularOrbitError(f"Energy {E:g} is the critical value at q={top.x:g}")
        return q_minus, q_plus

    def _orbit_quad(self, model: HamiltonianModel, E: float, integrand, bracket=None) -> float:
        """int_{q-}^{q+} integrand(E - V(q)) dq with q = mid + half sin(theta)"""
        V = self._potential_1d(model)
        q_minus, q_plus = self.turning_points(model, E, bracket)
        mid, half = 0.5 * (q_plus + q_minus), 0.5 * (q_plus - q_minus)

        def f(theta):
            q = mid + half * np.sin(theta)
            kinetic = E - V(q)
            if kinetic <= 0.0:
                return 0.0
            return integrand(kinetic, half * np.cos(theta))

        value, _ = quad(f, -np.pi / 2, np.pi / 2, epsabs=0.0, epsrel=self.quad_rtol, limit=400)
        return value

    def action(self, model: HamiltonianModel, E: float, bracket=None) -> float:
        """Enclosed phase-space area J(E) = 2 int sqrt(2(E - V)) dq"""
        return 2.0 * self._orbit_quad(model, E, lambda k, jac: np.sqrt(2.0 * k) * jac, bracket)

    def period(self, model: HamiltonianModel, E: float, bracket=None) -> float:
        """T_E = J'(E) = 2 int dq / sqrt(2(E - V))"""
        return 2.0 * self._orbit_quad(model, E, lambda k, jac: jac / np.sqrt(2.0 * k), bracket)

    def action_and_period(
        self,
        model: HamiltonianModel,
        E: float,
        bracket: Optional[Tuple[float, float]] = None,
    ) -> Tuple[float, float]:
        return self.action(model, E, bracket), self.period(model, E, bracket)

    # ==================== SEMICLASSICAL DIAGNOSTICS ====================

    @staticmethod
    def ehrenfest_indicator(F: np.ndarray, t: float, hbar: float) -> float:
        """sqrt(hbar) |F_t|^3 (1 + |t|); semiclassics is advisory once it exceeds 1"""
        return float(np.sqrt(hbar) * np.linalg.norm(F, 2) ** 3 * (1.0 + abs(t)))

    @staticmethod
    def validity_horizon(lyapunov: float, hbar: float, eps: float = 0.1, integrable: bool = False) -> float:
        """
        Largest |t| for which the coherent-state remainder stays small

        Hyperbolic flows (|F_t| <= e^{gamma |t|}): (1 - eps) / (6 gamma) |log hbar|.
        Integrable flows (|F_t| <= c |t|): hbar^{-1/6 + eps}.
        """
        if not 0.0 < hbar < 1.0:
            raise ValueError(f"hbar must lie in (0, 1), got {hbar}")
        if integrable or lyapunov <= 0.0:
            return float(hbar ** (-1.0 / 6.0 + eps))
        return float((1.0 - eps) / (6.0 * lyapunov) * abs(np.log(hbar)))

    def egorov_defect(
        self,
        model0: HamiltonianModel,
        model_delta: HamiltonianModel,
        observable: Observable,
        z: np.ndarray,
        t: float,
        hbar: float,
        oracle=None,
        grid=None,
    ) -> float:
        """
        |<E_q(t) phi_z, L E_q(t) phi_z> - L(E_cl(t, z))| with the quantum side from the grid oracle
        """
        if oracle is None:
            from echolab.oracle_service import oracle_service as oracle

        echoed = self.classical_echo(model0, model_delta, z, t)
        classical = float(observable.symbol(np.array([echoed[0]]), np.array([echoed[1]]))[0])
        psi = oracle.echo_state(model0, model_delta, z, t, hbar, grid)
        quantum = oracle.observable_expectation(observable, psi)
        defect = abs(quantum - classical)
        logger.debug(f"Egorov defect at hbar={hbar:g}, t={t:g}: {defect:.3e}")
        return float(defect)


# Global flow service instance
flow_service = ClassicalFlowService()
