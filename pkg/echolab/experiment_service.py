"""
Experiment Service
Runs one validated scenario: fidelity, return, revival, convergence, egorov and property-check
experiments, each producing the rows of a single output table
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from echolab.classical_flow_service import ClassicalFlowService, flow_service
from echolab.echo_service import EchoService, echo_service
from echolab.exceptions import DegenerateWindowError, EchoLabError, InvalidExponentsError, SolverError
from echolab.oracle_service import Grid1D, QuantumOracleService, oracle_service
from echolab.property_suite import run_all
from echolab.revival_service import CutoffName, LadderSource, RevivalService, WavepacketSpec, revival_service
from echolab.scenario_loader import build_models, build_observable
from echolab.scenario_schemas import ExperimentKind, Scenario
from echolab.table_writer import Table

logger = logging.getLogger(__name__)

# Raised by numpy/scipy when a computation breaks down; reported as numerical failures
SOLVER_ERRORS = (np.linalg.LinAlgError, ArithmeticError, ValueError, RuntimeError)

COLUMNS = {
    ExperimentKind.FIDELITY: [
        "t", "hbar", "f_semi", "f_exact", "abs_err", "prefactor", "exponent", "caustic", "ehrenfest_flag",
    ],
    ExperimentKind.RETURN: ["t", "hbar", "r_semi", "r_exact", "abs_err", "caustic", "ehrenfest_flag"],
    ExperimentKind.REVIVAL: ["t", "hbar", "rho", "rho_a1", "rho_a2", "rho_poisson", "envelope", "in_window"],
    ExperimentKind.CONVERGENCE: ["hbar", "max_err", "fit", "ehrenfest_flag"],
    ExperimentKind.EGOROV: ["t", "hbar", "defect", "ehrenfest_flag"],
    ExperimentKind.PROPERTY_CHECK: ["check", "samples", "max_violation", "tolerance", "passed"],
}

# Default revival grid: samples per classical period and in the collapse window
PERIOD_SAMPLES = 101
WINDOW_SAMPLES = 20


@dataclass
class ItemResult:
    """Rows of one sweep item; failures travel as plain data so worker processes can return them"""
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failure: Optional[Dict[str, Any]] = None


@dataclass
class ExperimentResult:
    table: Table
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        if not self.failures:
            return "ok"
        first = self.failures[0]
        return f"failed: {first['error']}: {first['message']}"

    @property
    def exit_code(self) -> int:
        return max((f["exit_code"] for f in self.failures), default=0)


def _failure(error: EchoLabError, hbar: Optional[float]) -> Dict[str, Any]:
    return {
        "error": type(error).__name__,
        "message": str(error),
        "exit_code": error.exit_code,
        "hbar": hbar,
    }


def _nan_max(values: np.ndarray) -> Optional[float]:
    finite = np.asarray(values)[np.isfinite(values)]
    return float(np.max(finite)) if len(finite) else None


def _run_item(payload: Tuple[Dict[str, Any], Optional[float]]) -> ItemResult:
    """Process-pool entry point: rebuild the scenario and run one sweep item"""
    data, hbar = payload
    return experiment_service.run_item(Scenario.model_validate(data), hbar)


class ExperimentService:
    """Service dispatching scenarios to the echo, revival, oracle and property machinery"""

    def __init__(
        self,
        flows: Optional[ClassicalFlowService] = None,
        echoes: Optional[EchoService] = None,
        revivals: Optional[RevivalService] = None,
        oracle: Optional[QuantumOracleService] = None,
    ):
        self.flows = flows or flow_service
        self.echoes = echoes or echo_service
        self.revivals = revivals or revival_service
        self.oracle = oracle or oracle_service

    # ==================== DISPATCH ====================

    def run(self, scenario: Scenario, jobs: int = 1, deterministic: bool = False) -> ExperimentResult:
        """
        Run every sweep item of the scenario and collect the rows in sweep order

        Args:
            scenario: validated scenario
            jobs: upper bound on concurrent sweep items
            deterministic: run items serially in this process

        Returns:
            ExperimentResult; rows of items that finished are kept when a later item fails
        """
        start = time.perf_counter()
        kind = scenario.experiment
        items = [None] if kind == ExperimentKind.PROPERTY_CHECK else scenario.hbar_values
        jobs = 1 if deterministic else max(1, min(jobs, len(items)))
        logger.info(f"Running '{scenario.name}' ({kind.value}): {len(items)} item(s), jobs={jobs}")

        if jobs == 1:
            results = [self.run_item(scenario, hbar) for hbar in items]
        else:
            data = scenario.model_dump(mode="json")
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_item, [(data, hbar) for hbar in items]))

        table = Table(columns=list(COLUMNS[kind]))
        failures = []
        summaries = {}
        for hbar, item in zip(items, results):
            table.rows.extend(item.rows)
            if item.summary:
                summaries[f"hbar={hbar:g}" if hbar is not None else "checks"] = item.summary
            if item.failure:
                failures.append(item.failure)

        summary = next(iter(summaries.values())) if len(summaries) == 1 else summaries
        if kind == ExperimentKind.CONVERGENCE:
            summary = self._fit_convergence(table)

        result = ExperimentResult(table, summary, failures, time.perf_counter() - start)
        if failures:
            logger.error(f"❌ '{scenario.name}' failed after {len(table.rows)} rows: {result.status}")
        else:
            logger.info(f"✓ '{scenario.name}' finished: {len(table.rows)} rows in {result.seconds:.2f}s")
        return result

    def run_item(self, scenario: Scenario, hbar: Optional[float]) -> ItemResult:
        """One sweep item; numerical and input errors are recorded, not raised"""
        runners = {
            ExperimentKind.FIDELITY: self._fidelity_rows,
            ExperimentKind.RETURN: self._return_rows,
            ExperimentKind.REVIVAL: self._revival_rows,
            ExperimentKind.CONVERGENCE: self._convergence_rows,
            ExperimentKind.EGOROV: self._egorov_rows,
            ExperimentKind.PROPERTY_CHECK: self._property_rows,
        }
        item = ItemResult()
        try:
            runners[scenario.experiment](scenario, hbar, item)
        except EchoLabError as e:
            logger.error(f"❌ {scenario.experiment.value} at hbar={hbar}: {e}")
            item.failure = _failure(e, hbar)
        except SOLVER_ERRORS as e:
            error = SolverError(e)
            logger.error(f"❌ {scenario.experiment.value} at hbar={hbar}: {error}")
            item.failure = _failure(error, hbar)
        return item

    # ==================== HELPERS ====================

    def _oracle_grid(self, scenario: Scenario, hbar: float) -> Optional[Grid1D]:
        section = scenario.oracle
        if not section.has_grid:
            return None
        return Grid1D(section.q_min, section.q_max, section.n_points, hbar)

    @staticmethod
    def _uses_oracle(scenario: Scenario) -> bool:
        return scenario.oracle.enabled and scenario.model0.dim == 1

    # ==================== ECHO EXPERIMENTS ====================

    def _fidelity_rows(self, scenario: Scenario, hbar: float, item: ItemResult):
        model0, model_delta = build_models(scenario)
        z0 = np.asarray(scenario.z0)
        times = scenario.times.grid()
        semi = self.echoes.fidelity_leading(model0, model_delta, z0, times, hbar)
        exact = np.full(len(times), np.nan)
        if self._uses_oracle(scenario):
            exact = self.oracle.exact_fidelity(
                model0, model_delta, z0, times, hbar,
                grid=self._oracle_grid(scenario, hbar),
                steps_per_unit=scenario.oracle.steps_per_unit,
            ).values
        err = np.abs(semi.values - exact)
        for k, t in enumerate(times):
            item.rows.append({
                "t": t,
                "hbar": hbar,
                "f_semi": semi.values[k],
                "f_exact": exact[k],
                "abs_err": err[k],
                "prefactor": semi.prefactors[k],
                "exponent": semi.exponents[k],
                "caustic": semi.caustic[k],
                "ehrenfest_flag": semi.flags[k],
            })
        item.summary = {"max_abs_err": _nan_max(err), "flagged_rows": int(np.sum(semi.flags))}

    def _return_rows(self, scenario: Scenario, hbar: float, item: ItemResult):
        model0, _ = build_models(scenario)
        z0 = np.asarray(scenario.z0)
        times = scenario.times.grid()
        semi = self.echoes.return_amplitude(model0, z0, times, hbar)
        exact = np.full(len(times), np.nan)
        if self._uses_oracle(scenario):
            exact = self.oracle.exact_return_amplitude(
                model0, z0, times, hbar,
                grid=self._oracle_grid(scenario, hbar),
                steps_per_unit=scenario.oracle.steps_per_unit,
            ).values
        err = np.abs(semi.values - exact)
        for k, t in enumerate(times):
            item.rows.append({
                "t": t,
                "hbar": hbar,
                "r_semi": semi.values[k],
                "r_exact": exact[k],
                "abs_err": err[k],
                "caustic": semi.caustic[k],
                "ehrenfest_flag": semi.flags[k],
            })
        item.summary = {"max_abs_err": _nan_max(err), "flagged_rows": int(np.sum(semi.flags))}

    def _convergence_rows(self, scenario: Scenario, hbar: float, item: ItemResult):
        """max_t |f_semi - f_exact| at one hbar; the fit is added once the sweep is complete"""
        model0, model_delta = build_models(scenario)
        z0 = np.asarray(scenario.z0)
        times = scenario.times.grid()
        semi = self.echoes.fidelity_leading(model0, model_delta, z0, times, hbar)
        exact = self.oracle.exact_fidelity(
            model0, model_delta, z0, times, hbar,
            grid=self._oracle_grid(scenario, hbar),
            steps_per_unit=scenario.oracle.steps_per_unit,
        )
        max_err = _nan_max(np.abs(semi.values - exact.values))
        logger.info(f"✓ hbar={hbar:g}: max |f_semi - f_exact| = {max_err:.3e}")
        item.rows.append({
            "hbar": hbar,
            "max_err": max_err if max_err is not None else np.nan,
            "fit": np.nan,
            "ehrenfest_flag": bool(np.any(semi.flags)),
        })

    @staticmethod
    def _fit_convergence(table: Table) -> Dict[str, Any]:
        """Least-squares slope of log max_err against log hbar; fills the fit column"""
        rows = [r for r in table.rows if np.isfinite(r["max_err"]) and r["max_err"] > 0]
        if len(rows) < 2:
            return {"slope": None, "decreasing": None}
        h = np.array([r["hbar"] for r in rows])
        err = np.array([r["max_err"] for r in rows])
        slope, intercept = np.polyfit(np.log(h), np.log(err), 1)
        for r in rows:
            r["fit"] = float(np.exp(intercept) * r["hbar"] ** slope)
        order = np.argsort(h)[::-1]
        decreasing = bool(np.all(np.diff(err[order]) < 0))
        logger.info(f"✓ Convergence slope {slope:.3f} over {len(rows)} hbar values")
        return {"slope": float(slope), "intercept": float(intercept), "decreasing": decreasing}

    def _egorov_rows(self, scenario: Scenario, hbar: float, item: ItemResult):
        model0, model_delta = build_models(scenario)
        observable = build_observable(scenario, model0)
        z0 = np.asarray(scenario.z0)
        times = scenario.times.grid()
        grid = self._oracle_grid(scenario, hbar)
        bundle = self.flows.evolve(model_delta, z0, times)
        for k, t in enumerate(times):
            defect = self.flows.egorov_defect(
                model0, model_delta, observable, z0, float(t), hbar, oracle=self.oracle, grid=grid
            )
            indicator = self.flows.ehrenfest_indicator(bundle.stability[k], t, hbar)
            item.rows.append({"t": t, "hbar": hbar, "defect": defect, "ehrenfest_flag": indicator > 1.0})
        item.summary = {"max_defect": max(r["defect"] for r in item.rows)}

    # ==================== REVIVALS ====================

    def _ladder(self, scenario: Scenario, hbar: float):
        model0, _ = build_models(scenario)
        section = scenario.revival
        if section.source == LadderSource.BOHR_SOMMERFELD:
            return self.revivals.bohr_sommerfeld_ladder(model0, hbar, section.window, section.center)

        # Levels below the window top: J(E_n) = 2 pi hbar (n + 1/2) <= J(E_hi)
        E_hi = section.window[1]
        k = int(np.floor(self.flows.action(model0, E_hi) / (2 * np.pi * hbar) - 0.5)) + 3
        grid = self._oracle_grid(scenario, hbar) or self.oracle.grid_for_levels(model0, hbar, E_hi)
        while k > grid.n_points // 4:
            grid = grid.refined()
        return self.oracle.eigensolve_1d(model0, hbar, k, grid=grid, ref_energy=section.center)

    def _revival_times(self, T_cl: float, T_rev: float, window) -> np.ndarray:
        parts = [np.linspace(0.0, 3 * T_cl, 3 * PERIOD_SAMPLES)]
        if window is not None:
            parts.append(np.geomspace(window[0], window[1], WINDOW_SAMPLES))
        if np.isfinite(T_rev):
            N = round(T_rev / T_cl)
            parts.append(np.linspace(N * T_cl - T_cl / 2, N * T_cl + T_cl / 2, PERIOD_SAMPLES))
        return np.unique(np.concatenate(parts))

    def _revival_rows(self, scenario: Scenario, hbar: float, item: ItemResult):
        section = scenario.revival
        ladder = self._ladder(scenario, hbar)
        spec = WavepacketSpec(
            center_energy=section.center,
            theta=section.theta,
            theta_prime=section.theta_prime,
            chi1=section.chi1,
            use_chi0=section.use_chi0,
            index_form=section.index_form,
        )
        packet = self.revivals.wavepacket_coefficients(ladder, spec)
        T_cl, T_rev = self.revivals.timescales(ladder)

        try:
            window = self.revivals.collapse_window(hbar, section.theta, section.delta1, section.delta2)
        except (InvalidExponentsError, DegenerateWindowError) as e:
            logger.warning(f"⚠ No collapse window at hbar={hbar:g}: {e}")
            window = None

        times = scenario.times.grid() if scenario.times is not None else self._revival_times(T_cl, T_rev, window)
        exact = self.revivals.autocorrelation(ladder, packet, times).rho
        a1 = self.revivals.truncated_autocorr(1, ladder, packet, times).rho
        a2 = self.revivals.truncated_autocorr(2, ladder, packet, times).rho

        sigma = hbar ** section.theta / (hbar * ladder.derivs[0])
        envelope = self.revivals.collapse_envelope(times, sigma, T_rev)
        poisson = np.full(len(times), np.nan)
        if section.chi1 == CutoffName.GAUSSIAN and section.index_form and not section.use_chi0:
            poisson = self.revivals.poisson_resummed_a2(times, sigma, T_rev, T_cl).rho

        in_window = np.zeros(len(times), dtype=bool)
        if window is not None:
            in_window = (times >= window[0]) & (times <= window[1])
        for k, t in enumerate(times):
            item.rows.append({
                "t": t,
                "hbar": hbar,
                "rho": exact[k],
                "rho_a1": a1[k],
                "rho_a2": a2[k],
                "rho_poisson": poisson[k],
                "envelope": envelope[k],
                "in_window": in_window[k],
            })

        summary = {
            "T_cl": T_cl,
            "T_rev": T_rev if np.isfinite(T_rev) else None,
            "levels": int(len(ladder.energies)),
            "ref_index": ladder.ref_index,
            "sigma": float(sigma),
            "window": list(window) if window is not None else None,
        }
        if np.any(in_window):
            summary["window_max_rho"] = float(np.max(exact[in_window]))
            summary["collapsed"] = self.revivals.is_collapsed(exact[in_window])
        if np.isfinite(T_rev):
            peak_t, peak_rho = self.revivals.revival_peak(ladder, packet)
            summary["revival_peak"] = {"t": peak_t, "rho": peak_rho}
        item.summary = summary

    # ==================== PROPERTY CHECKS ====================

    def _property_rows(self, scenario: Scenario, _hbar, item: ItemResult):
        section = scenario.properties
        results = run_all(
            samples=section.samples,
            dims=section.dims,
            seed=scenario.seed,
            scale=section.scale,
            orthogonal_samples=section.orthogonal_samples,
        )
        for r in results:
            item.rows.append({
                "check": r.name,
                "samples": r.samples,
                "max_violation": r.max_violation,
                "tolerance": r.tolerance,
                "passed": r.passed,
            })
        failed = [r.name for r in results if not r.passed]
        item.summary = {"failed_checks": failed}
        if failed:
            item.failure = {
                "error": "PropertyViolation",
                "message": f"checks out of tolerance: {failed}",
                "exit_code": 3,
                "hbar": None,
            }


# Global experiment service instance
experiment_service = ExperimentService()
