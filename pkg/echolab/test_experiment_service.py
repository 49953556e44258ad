"""Tests for scenario execution"""
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np
import pytest

from echolab.classical_flow_service import flow_service
from echolab.experiment_service import COLUMNS, ExperimentService
from echolab.models import build_model
from echolab.scenario_loader import load_scenario, parse_scenario
from echolab.scenario_schemas import ExperimentKind

experiments = ExperimentService()

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

DELTA = 0.05
HBAR = 0.01

FIDELITY = {
    "name": "displaced_oscillator",
    "experiment": "fidelity",
    "model0": {"name": "harmonic"},
    "perturbation": {"name": "linear", "delta": DELTA},
    "z0": [1.0, 0.0],
    "hbar": HBAR,
    "times": {"t_max": 2 * np.pi, "n_samples": 9},
    "oracle": {"steps_per_unit": 4000},
}

FREE_RETURN = {
    "name": "free_return",
    "experiment": "return",
    "model0": {"name": "free"},
    "z0": [0.0, 0.0],
    "hbar": [0.01, 0.5],
    "times": {"t_max": 1.0, "n_samples": 5},
    "oracle": {"q_min": -2.0, "q_max": 2.0, "n_points": 1024},
}

REVIVAL = {
    "name": "anharmonic_revival",
    "experiment": "revival",
    "model0": {"name": "anharmonic", "params": {"alpha": 0.1}},
    "hbar": 0.01,
    "revival": {"window": [0.3, 1.2], "center_energy": 0.75, "source": "bohr_sommerfeld"},
}


def test_fidelity_matches_closed_form():
    result = experiments.run(parse_scenario(FIDELITY))
    assert result.exit_code == 0
    assert result.status == "ok"
    assert result.table.columns == COLUMNS[ExperimentKind.FIDELITY]
    assert len(result.table.rows) == 9
    for row in result.table.rows:
        closed = np.exp(-2 * DELTA ** 2 * np.sin(row["t"] / 2) ** 2 / HBAR)
        assert abs(row["f_semi"] - closed) < 1e-8
        assert abs(row["f_exact"] - closed) < 1e-6
        assert not row["ehrenfest_flag"]
        assert not row["caustic"]
    assert result.summary["max_abs_err"] < 1e-6


def test_disabled_oracle_leaves_exact_column_empty():
    scenario = parse_scenario({**FIDELITY, "oracle": {"enabled": False}})
    rows = experiments.run(scenario).table.rows
    assert all(np.isnan(row["f_exact"]) for row in rows)
    assert _repeatable(scenario)


def _repeatable(scenario):
    first = experiments.run(scenario, deterministic=True).table.rows
    second = experiments.run(scenario, deterministic=True).table.rows
    return [r["f_semi"] for r in first] == [r["f_semi"] for r in second]


def test_failed_sweep_item_keeps_earlier_rows():
    result = experiments.run(parse_scenario(FREE_RETURN))
    assert result.exit_code == 3
    assert result.status.startswith("failed: DomainError")
    assert [f["hbar"] for f in result.failures] == [0.5]
    rows = result.table.rows
    assert len(rows) == 5
    assert all(row["hbar"] == 0.01 for row in rows)
    for row in rows:
        assert abs(row["r_semi"] - (1 + row["t"] ** 2 / 4) ** -0.25) < 1e-8
        assert row["abs_err"] < 1e-8


def test_solver_errors_are_numerical_failures(monkeypatch):
    service = ExperimentService()
    return_rows = service._return_rows

    def singular_at_large_hbar(scenario, hbar, item):
        if hbar > 0.1:
            raise np.linalg.LinAlgError("Singular matrix")
        return_rows(scenario, hbar, item)

    monkeypatch.setattr(service, "_return_rows", singular_at_large_hbar)
    result = service.run(parse_scenario({**FREE_RETURN, "oracle": {"enabled": False}}), deterministic=True)
    assert result.exit_code == 3
    assert result.status == "failed: SolverError: LinAlgError: Singular matrix"
    assert result.failures[0]["hbar"] == 0.5
    assert len(result.table.rows) == 5


def test_parallel_sweep_matches_serial():
    scenario = parse_scenario({**FREE_RETURN, "hbar": [0.01, 0.02], "oracle": {"enabled": False}})
    serial = experiments.run(scenario, deterministic=True).table.rows
    parallel = experiments.run(scenario, jobs=2).table.rows
    assert [(r["hbar"], r["t"], r["r_semi"]) for r in serial] == [(r["hbar"], r["t"], r["r_semi"]) for r in parallel]


def test_convergence_rows_and_fit():
    scenario = parse_scenario({
        "name": "anharmonic_convergence",
        "experiment": "convergence",
        "model0": {"name": "anharmonic"},
        "perturbation": {"name": "quadratic", "delta": 0.02},
        "hbar": [0.1, 0.05],
        "times": {"t_max": 1.0, "n_samples": 11},
    })
    result = experiments.run(scenario)
    assert result.exit_code == 0
    rows = result.table.rows
    assert [r["hbar"] for r in rows] == [0.1, 0.05]
    assert all(np.isfinite(r["max_err"]) and np.isfinite(r["fit"]) for r in rows)
    assert isinstance(result.summary["slope"], float)


def test_quartic_convergence_scales_at_small_hbar():
    result = experiments.run(load_scenario(SCENARIOS / "quartic_convergence_small_hbar.toml"))
    assert result.exit_code == 0
    assert [r["hbar"] for r in result.table.rows] == [0.01, 0.004, 0.002]
    assert result.summary["decreasing"]
    assert result.summary["slope"] >= 0.4


def test_egorov_trend_scenario_is_monotone():
    result = experiments.run(load_scenario(SCENARIOS / "egorov_trend.toml"))
    assert result.exit_code == 0
    defects = [r["defect"] for r in result.table.rows if r["t"] == 1.0]
    assert len(defects) == 3
    assert defects[0] > defects[1] > defects[2]


def test_egorov_rows():
    scenario = parse_scenario({
        "name": "egorov",
        "experiment": "egorov",
        "model0": {"name": "anharmonic"},
        "perturbation": {"name": "quadratic", "delta": 0.1},
        "hbar": 0.05,
        "times": {"values": [0.0, 0.5]},
    })
    result = experiments.run(scenario)
    assert result.exit_code == 0
    defects = [r["defect"] for r in result.table.rows]
    assert len(defects) == 2
    assert all(0.0 <= d < 0.2 for d in defects)


def test_revival_rows_and_summary():
    result = experiments.run(parse_scenario(REVIVAL))
    assert result.exit_code == 0
    rows = result.table.rows
    assert rows[0]["t"] == 0.0
    assert abs(rows[0]["rho"] - 1.0) < 1e-12
    assert all(np.isnan(r["rho_poisson"]) for r in rows)
    assert any(r["in_window"] for r in rows)
    summary = result.summary
    assert summary["T_cl"] > 0
    assert summary["T_rev"] > summary["T_cl"]
    assert summary["window"][0] < summary["window"][1]
    assert 0.0 < summary["revival_peak"]["rho"] <= 1.0


def test_revival_poisson_column_matches_direct_sum():
    revival = {**REVIVAL["revival"], "index_form": True, "use_chi0": False}
    result = experiments.run(parse_scenario({**REVIVAL, "revival": revival}))
    assert result.exit_code == 0
    gaps = [abs(r["rho_poisson"] - r["rho_a2"]) for r in result.table.rows]
    assert max(gaps) < 1e-8


def test_quartic_revival_scenario_on_grid_ladder():
    with open(SCENARIOS / "quartic_revival.toml", "rb") as f:
        data = tomllib.load(f)
    result = experiments.run(parse_scenario({**data, "hbar": 0.01}))
    assert result.exit_code == 0
    rows = result.table.rows
    assert abs(rows[0]["rho"] - 1.0) < 1e-12
    gaps = [abs(r["rho_poisson"] - r["rho_a2"]) for r in rows]
    assert max(gaps) < 1e-8
    period = flow_service.period(build_model("quartic"), 1.0)
    assert abs(result.summary["T_cl"] - period) < 0.01 * period
    assert result.summary["T_rev"] > result.summary["T_cl"]


def test_property_check_rows():
    scenario = parse_scenario({
        "name": "props",
        "experiment": "property-check",
        "properties": {"samples": 30, "orthogonal_samples": 10},
    })
    result = experiments.run(scenario)
    assert result.exit_code == 0
    assert [r["check"] for r in result.table.rows][0] == "random_symplectic_defect"
    assert len(result.table.rows) == 6
    assert all(r["passed"] for r in result.table.rows)


def test_explicit_revival_times_are_used():
    result = experiments.run(parse_scenario({**REVIVAL, "times": {"values": [0.0, 1.0, 2.0]}}))
    assert [r["t"] for r in result.table.rows] == [0.0, 1.0, 2.0]


@pytest.mark.parametrize("kind", list(ExperimentKind))
def test_every_experiment_has_columns(kind):
    assert COLUMNS[kind]
