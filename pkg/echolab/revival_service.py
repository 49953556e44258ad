"""
Revival Service
Bohr-Sommerfeld ladders, wavepacket coefficients, autocorrelations and their truncated
and Poisson-resummed approximants, revival timescales and the collapse window
for one-dimensional confining Hamiltonians
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from echolab.classical_flow_service import ClassicalFlowService, flow_service
from echolab.config import settings
from echolab.exceptions import (
    AssumptionViolationError,
    DegenerateWindowError,
    EmptyPacketError,
    InvalidExponentsError,
    InvalidOrderError,
    NoLevelsError,
    NonConfiningError,
    UnsupportedCutoffError,
)
from echolab.models import HamiltonianModel

logger = logging.getLogger(__name__)

# Fewest levels a window must hold for a ladder
MIN_LEVELS = 3

TIME_CHUNK = 512


class LadderSource(str, enum.Enum):
    BOHR_SOMMERFELD = "bohr_sommerfeld"
    GRID_DIAGONALIZATION = "grid_diagonalization"
    EXPLICIT_FORMULA = "explicit_formula"


class CutoffName(str, enum.Enum):
    GAUSSIAN = "gaussian"   # e^{-x^2/4}
    BUMP = "bump"           # compactly supported, = 1 on [-1/2, 1/2]


class Approximant(str, enum.Enum):
    EXACT = "exact"
    A1 = "a1"
    A2 = "a2"
    A3 = "a3"
    POISSON_A2 = "poisson_a2"


@dataclass(frozen=True)
class SpectralLadder:
    """E_n = b((n + 1/2) hbar) over a window of indices, with b', b'', b''' at the reference level"""
    hbar: float
    indices: np.ndarray
    energies: np.ndarray
    ref_index: int
    derivs: Tuple[float, float, float]
    source: LadderSource

    def __post_init__(self):
        if len(self.energies) == 0:
            raise NoLevelsError("Spectral ladder is empty")
        if np.any(np.diff(self.energies) <= 0):
            raise AssumptionViolationError("Ladder energies must be strictly increasing")
        if self.ref_index not in set(int(n) for n in self.indices):
            raise AssumptionViolationError(f"Reference index {self.ref_index} outside the ladder")

    @property
    def ref_energy(self) -> float:
        return float(self.energies[int(np.searchsorted(self.indices, self.ref_index))])

    def offsets(self) -> np.ndarray:
        """n - n_bar"""
        return (self.indices - self.ref_index).astype(float)


@dataclass(frozen=True)
class WavepacketSpec:
    center_energy: float
    theta: float = settings.DEFAULT_THETA
    theta_prime: float = settings.DEFAULT_THETA_PRIME
    chi1: CutoffName = CutoffName.GAUSSIAN
    use_chi0: bool = True
    index_form: bool = False

    def __post_init__(self):
        if not 0.0 < self.theta_prime < self.theta < 1.0:
            raise InvalidExponentsError(
                f"Need 0 < theta' < theta < 1, got theta={self.theta}, theta'={self.theta_prime}"
            )


@dataclass(frozen=True)
class Wavepacket:
    indices: np.ndarray
    coefficients: np.ndarray
    normalization: float  # K_{tau,hbar}

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2


@dataclass
class AutocorrSeries:
    times: np.ndarray
    values: np.ndarray
    order: Approximant

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.values) ** 2


# ==================== CUTOFFS ====================

def _smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step, 0 for s <= 0 and 1 for s >= 1"""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        g = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return f / (f + g)


def chi0(x: np.ndarray) -> np.ndarray:
    """Smooth bump: 1 on [-1/2, 1/2], 0 outside (-1, 1)"""
    x = np.abs(np.asarray(x, dtype=float))
    return _smooth_step(2.0 - 2.0 * x)


def chi1(x: np.ndarray, kind: CutoffName = CutoffName.GAUSSIAN) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind == CutoffName.GAUSSIAN:
        return np.exp(-0.25 * x ** 2)
    if kind == CutoffName.BUMP:
        return chi0(x)
    raise UnsupportedCutoffError(f"Unknown cutoff '{kind}'")


# ==================== LADDERS ====================

def _central_derivatives(f: Callable[[float], float], x: float, h: float) -> Tuple[float, float]:
    """First and second derivative by five-point stencils"""
    f2m, f1m, f0, f1p, f2p = (f(x + k * h) for k in (-2, -1, 0, 1, 2))
    d1 = (f2m - 8 * f1m + 8 * f1p - f2p) / (12 * h)
    d2 = (-f2m + 16 * f1m - 30 * f0 + 16 * f1p - f2p) / (12 * h * h)
    return d1, d2


def ladder_from_levels(
    energies: Sequence[float],
    hbar: float,
    ref_energy: Optional[float] = None,
    source: LadderSource = LadderSource.GRID_DIAGONALIZATION,
    first_index: int = 0,
) -> SpectralLadder:
    """
    Ladder from a list of consecutive levels; b-derivatives by finite differences in n

    E_{n+1} - E_{n-1} = 2 hbar b' + O(hbar^3), and similarly for b'', b'''.
    """
    energies = np.asarray(energies, dtype=float)
    if len(energies) < 5:
        raise NoLevelsError(f"Need at least 5 levels for ladder derivatives, got {len(energies)}")
    indices = np.arange(first_index, first_index + len(energies))
    if ref_energy is None:
        pos = len(energies) // 2
    else:
        pos = int(np.argmin(np.abs(energies - ref_energy)))
    pos = min(max(pos, 2), len(energies) - 3)
    e = energies
    b1 = (e[pos + 1] - e[pos - 1]) / (2 * hbar)
    b2 = (e[pos + 1] - 2 * e[pos] + e[pos - 1]) / hbar ** 2
    b3 = (e[pos + 2] - 2 * e[pos + 1] + 2 * e[pos - 1] - e[pos - 2]) / (2 * hbar ** 3)
    return SpectralLadder(
        hbar=hbar,
        indices=indices,
        energies=energies,
        ref_index=int(indices[pos]),
        derivs=(float(b1), float(b2), float(b3)),
        source=source,
    )


def explicit_ladder(
    b: Callable[[float], float],
    hbar: float,
    n_range: Tuple[int, int],
    ref_index: int,
    derivs: Optional[Tuple[float, float, float]] = None,
) -> SpectralLadder:
    """E_n = b((n + 1/2) hbar) for n_range[0] <= n < n_range[1]"""
    indices = np.arange(n_range[0], n_range[1])
    if len(indices) == 0:
        raise NoLevelsError(f"Empty index range {n_range}")
    energies = np.array([b((n + 0.5) * hbar) for n in indices], dtype=float)
    if derivs is None:
        F = (ref_index + 0.5) * hbar
        h = 1e-3 * max(abs(F), 1.0)
        d1, d2 = _central_derivatives(b, F, h)
        _, d3 = _central_derivatives(lambda x: _central_derivatives(b, x, h)[0], F, h)
        derivs = (d1, d2, d3)
    return SpectralLadder(
        hbar=hbar,
        indices=indices,
        energies=energies,
        ref_index=ref_index,
        derivs=tuple(float(v) for v in derivs),
        source=LadderSource.EXPLICIT_FORMULA,
    )


class RevivalService:
    """Service for one-dimensional spectral ladders and wavepacket revivals"""

    def __init__(self, flows: Optional[ClassicalFlowService] = None):
        self.flows = flows or flow_service
        self.collapse_threshold = settings.COLLAPSE_THRESHOLD
        self.term_cutoff = settings.POISSON_TERM_CUTOFF

    # ==================== BOHR-SOMMERFELD ====================

    def _action(self, model: HamiltonianModel, E: float) -> float:
        try:
            return self.flows.action(model, E)
        except NonConfiningError:
            q0 = model.base.q_min
            if E <= float(model.potential(np.array([q0]))):
                return 0.0
            raise

    def period_derivatives(self, model: HamiltonianModel, E: float) -> Tuple[float, float, float]:
        """T(E), T'(E), T''(E)"""
        V_min = float(model.potential(np.array([model.base.q_min])))
        h = 1e-3 * max(E - V_min, 1e-6)
        period = lambda e: self.flows.period(model, e)
        d1, d2 = _central_derivatives(period, E, h)
        return period(E), d1, d2

    def bohr_sommerfeld_ladder(
        self,
        model: HamiltonianModel,
        hbar: float,
        window: Tuple[float, float],
        ref_energy: float,
    ) -> SpectralLadder:
        """
        Solve J(E_n) = 2 pi (n + 1/2) hbar for every level in the window

        b0(F) = J^{-1}(2 pi F), so b0' = 2 pi / T, b0'' = -(2 pi)^2 T' / T^3 and
        b0''' = -(2 pi)^3 (T'' T - 3 T'^2) / T^5, all at the reference level.
        """
        E_lo, E_hi = window
        if not E_lo < E_hi:
            raise NoLevelsError(f"Empty energy window {window}")
        J_lo, J_hi = self._action(model, E_lo), self._action(model, E_hi)

        energies_on_window = np.linspace(E_lo, E_hi, 9)
        actions = [self._action(model, e) for e in energies_on_window]
        if np.any(np.diff(actions) < 0):
            raise AssumptionViolationError("Action is not monotone on the window")

        quantum = 2.0 * np.pi * hbar
        n_min = int(np.ceil(J_lo / quantum - 0.5))
        n_max = int(np.floor(J_hi / quantum - 0.5))
        n_min = max(n_min, 0)
        if n_max - n_min + 1 < MIN_LEVELS:
            found = max(n_max - n_min + 1, 0)
            raise NoLevelsError(
                f"{found} Bohr-Sommerfeld level(s) in {window} at hbar={hbar:g}; need at least {MIN_LEVELS}"
            )

        V_min = float(model.potential(np.array([model.base.q_min])))
        lo = max(E_lo, V_min + 1e-14)
        energies = []
        for n in range(n_min, n_max + 1):
            target = quantum * (n + 0.5)
            energies.append(brentq(lambda e: self._action(model, e) - target, lo, E_hi, xtol=1e-14, rtol=1e-15))
        energies = np.array(energies)
        indices = np.arange(n_min, n_max + 1)

        ref = int(np.clip(round(self._action(model, ref_energy) / quantum - 0.5), n_min, n_max))
        T, dT, d2T = self.period_derivatives(model, float(energies[ref - n_min]))
        b1 = 2 * np.pi / T
        b2 = -(2 * np.pi) ** 2 * dT / T ** 3
        b3 = -(2 * np.pi) ** 3 * (d2T * T - 3 * dT ** 2) / T ** 5
        logger.info(f"✓ Bohr-Sommerfeld ladder: {len(energies)} levels, n_bar={ref}, b0'={b1:.6g}")
        return SpectralLadder(
            hbar=hbar,
            indices=indices,
            energies=energies,
            ref_index=ref,
            derivs=(float(b1), float(b2), float(b3)),
            source=LadderSource.BOHR_SOMMERFELD,
        )

    # ==================== WAVEPACKETS ====================

    def wavepacket_coefficients(self, ladder: SpectralLadder, spec: WavepacketSpec) -> Wavepacket:
        """
        c_n = K chi1((E_n - E_nbar)/tau) chi0((E_n - E)/eps), tau = hbar^theta, eps = hbar^theta'

        K normalizes sum |c_n|^2 = 1. With index_form the first argument becomes (n - n_bar)/sigma_eff,
        sigma_eff = tau / (hbar b0').
        """
        hbar = ladder.hbar
        tau = hbar ** spec.theta
        eps = hbar ** spec.theta_prime
        if spec.index_form:
            sigma_eff = tau / (hbar * ladder.derivs[0])
            x1 = ladder.offsets() / sigma_eff
        else:
            x1 = (ladder.energies - ladder.ref_energy) / tau
        weights = chi1(x1, spec.chi1)
        if spec.use_chi0:
            weights = weights * chi0((ladder.energies - spec.center_energy) / eps)
        if np.max(np.abs(weights)) < 1e-300:
            raise EmptyPacketError("All cutoff weights vanish on the ladder")
        K = 1.0 / np.sqrt(np.sum(weights ** 2))
        return Wavepacket(indices=ladder.indices, coefficients=K * weights, normalization=float(K))

    # ==================== AUTOCORRELATIONS ====================

    @staticmethod
    def _phase_sum(weights: np.ndarray, frequencies: np.ndarray, times: np.ndarray) -> np.ndarray:
        """sum_n w_n exp(-i t omega_n), chunked over times"""
        keep = weights > 0
        w, omega = weights[keep], frequencies[keep]
        out = np.empty(len(times), dtype=complex)
        for start in range(0, len(times), TIME_CHUNK):
            block = times[start:start + TIME_CHUNK]
            out[start:start + TIME_CHUNK] = np.exp(-1j * np.outer(block, omega)) @ w
        return out

    def autocorrelation(
        self,
        ladder: SpectralLadder,
        packet: Wavepacket,
        times: np.ndarray,
    ) -> AutocorrSeries:
        """a(t) = sum |c_n|^2 e^{-it(E_n - E_nbar)/hbar} (frame rotating with E_nbar)"""
        times = np.asarray(times, dtype=float)
        omega = (ladder.energies - ladder.ref_energy) / ladder.hbar
        return AutocorrSeries(times, self._phase_sum(packet.weights, omega, times), Approximant.EXACT)

    def truncated_autocorr(
        self,
        order: int,
        ladder: SpectralLadder,
        packet: Wavepacket,
        times: np.ndarray,
    ) -> AutocorrSeries:
        """
        a_i(t) with E_n - E_nbar replaced by its Taylor polynomial kappa_i in m = n - n_bar

        kappa_1 = hbar b' m, kappa_2 adds hbar^2 b'' m^2 / 2, kappa_3 adds hbar^3 b''' m^3 / 6
        (the hbar^3 b_2' m correction is not available and taken as 0).
        """
        if order not in (1, 2, 3):
            raise InvalidOrderError(f"Truncation order must be 1, 2 or 3, got {order}")
        hbar = ladder.hbar
        b1, b2, b3 = ladder.derivs
        m = ladder.offsets()
        kappa = hbar * b1 * m
        if order >= 2:
            kappa = kappa + 0.5 * hbar ** 2 * b2 * m ** 2
        if order >= 3:
            kappa = kappa + hbar ** 3 * b3 * m ** 3 / 6.0
        times = np.asarray(times, dtype=float)
        return AutocorrSeries(
            times, self._phase_sum(packet.weights, kappa / hbar, times), Approximant(f"a{order}")
        )

    def poisson_resummed_a2(
        self,
        times: np.ndarray,
        sigma: float,
        T_rev: float,
        T_cl: float,
        chi1_kind: CutoffName = CutoffName.GAUSSIAN,
    ) -> AutocorrSeries:
        """
        a2(t) = K^2 sqrt(2 pi / g_t) sum_l exp(-2 pi^2 (l - t/T_cl)^2 / g_t), g_t = 1/sigma^2 + 4 i pi t / T_rev

        K^2 = 1 / sum_m exp(-m^2 / (2 sigma^2)) over all integers m.
        """
        if chi1_kind != CutoffName.GAUSSIAN:
            raise UnsupportedCutoffError("Poisson resummation needs the Gaussian cutoff")
        if sigma <= 0:
            raise AssumptionViolationError(f"sigma must be positive, got {sigma}")
        times = np.asarray(times, dtype=float)
        span = int(np.ceil(12.0 * sigma)) + 10
        m = np.arange(-span, span + 1, dtype=float)
        K2 = 1.0 / np.sum(np.exp(-m ** 2 / (2 * sigma ** 2)))

        inv_rev = 0.0 if np.isinf(T_rev) else 1.0 / T_rev
        log_cut = np.log(1.0 / self.term_cutoff)
        values = np.empty(len(times), dtype=complex)
        for k, t in enumerate(times):
            g = 1.0 / sigma ** 2 + 4j * np.pi * t * inv_rev
            decay = (1.0 / g).real
            half_width = int(np.ceil(np.sqrt(log_cut / (2 * np.pi ** 2 * decay)))) + 1
            center = t / T_cl
            ell = np.arange(np.floor(center) - half_width, np.ceil(center) + half_width + 1)
            values[k] = K2 * np.sqrt(2 * np.pi / g) * np.sum(np.exp(-2 * np.pi ** 2 * (ell - center) ** 2 / g))
        return AutocorrSeries(times, values, Approximant.POISSON_A2)

    # ==================== TIMESCALES ====================

    @staticmethod
    def timescales(ladder: SpectralLadder) -> Tuple[float, float]:
        """(T_cl, T_rev) = (2 pi / b0', 4 pi / (hbar b0''))"""
        b1, b2, _ = ladder.derivs
        if b1 <= 0:
            raise AssumptionViolationError(f"b0' must be positive, got {b1}")
        T_cl = 2 * np.pi / b1
        if abs(b2) < 1e-10:
            return T_cl, float("inf")
        return T_cl, 4 * np.pi / (ladder.hbar * abs(b2))

    @staticmethod
    def collapse_window(hbar: float, theta: float, delta1: float, delta2: float) -> Tuple[float, float]:
        """J_hbar = [hbar^{1 - 2 theta - delta1}, hbar^{delta2/2 - theta}]"""
        if delta1 <= 0 or delta2 <= 0:
            raise InvalidExponentsError("delta1 and delta2 must be positive")
        if delta2 + delta1 / 2 + theta >= 1:
            raise InvalidExponentsError(
                f"delta2 + delta1/2 + theta = {delta2 + delta1 / 2 + theta:g} must be < 1"
            )
        lo = hbar ** (1 - 2 * theta - delta1)
        hi = hbar ** (delta2 / 2 - theta)
        if not lo < hi:
            raise DegenerateWindowError(f"Collapse window [{lo:g}, {hi:g}] is empty")
        return float(lo), float(hi)

    @staticmethod
    def truncation_horizon(order: int, hbar: float, tau: float, eps: float = 0.1) -> float:
        """hbar^{1 + eps} tau^{-1 - i}: times below which the order-i approximant is accurate"""
        if order not in (1, 2, 3):
            raise InvalidOrderError(f"Truncation order must be 1, 2 or 3, got {order}")
        return float(hbar ** (1 + eps) * tau ** (-1 - order))

    @staticmethod
    def poisson_width(times: np.ndarray, sigma: float, T_rev: float) -> Tuple[np.ndarray, np.ndarray]:
        """Width delta_t of each Poisson Gaussian and the ratio |g_0 / g_t|"""
        times = np.asarray(times, dtype=float)
        inv_rev = 0.0 if np.isinf(T_rev) else 1.0 / T_rev
        width = np.sqrt(1.0 / sigma ** 2 + 16 * np.pi ** 2 * times ** 2 * sigma ** 2 * inv_rev ** 2)
        g = 1.0 / sigma ** 2 + 4j * np.pi * times * inv_rev
        return width, np.abs((1.0 / sigma ** 2) / g)

    @staticmethod
    def collapse_envelope(times: np.ndarray, sigma: float, T_rev: float) -> np.ndarray:
        """(1 + (4 pi t sigma^2 / T_rev)^2)^{-1/2}: peak return probability of the a2 train"""
        times = np.asarray(times, dtype=float)
        inv_rev = 0.0 if np.isinf(T_rev) else 1.0 / T_rev
        return (1.0 + (4 * np.pi * times * sigma ** 2 * inv_rev) ** 2) ** -0.5

    def revival_frame_defect(
        self,
        ladder: SpectralLadder,
        packet: Wavepacket,
        s_grid: np.ndarray,
    ) -> float:
        """max_s |a2(N T_cl + s) - a2(s)|, N = round(T_rev / T_cl)"""
        T_cl, T_rev = self.timescales(ladder)
        if np.isinf(T_rev):
            raise AssumptionViolationError("Linear ladders have no revival time")
        N = round(T_rev / T_cl)
        s_grid = np.asarray(s_grid, dtype=float)
        early = self.truncated_autocorr(2, ladder, packet, s_grid).values
        late = self.truncated_autocorr(2, ladder, packet, N * T_cl + s_grid).values
        return float(np.max(np.abs(late - early)))

    def revival_peak(
        self,
        ladder: SpectralLadder,
        packet: Wavepacket,
        n_samples: int = 2001,
    ) -> Tuple[float, float]:
        """(t, rho) of the largest exact return probability within T_cl/2 of N T_cl"""
        T_cl, T_rev = self.timescales(ladder)
        if np.isinf(T_rev):
            raise AssumptionViolationError("Linear ladders have no revival time")
        N = round(T_rev / T_cl)
        times = np.linspace(N * T_cl - T_cl / 2, N * T_cl + T_cl / 2, n_samples)
        rho = self.autocorrelation(ladder, packet, times).rho
        k = int(np.argmax(rho))
        return float(times[k]), float(rho[k])

    def is_collapsed(self, rho: np.ndarray) -> bool:
        return bool(np.all(np.asarray(rho) <= self.collapse_threshold))


# Global revival service instance
revival_service = RevivalService()
