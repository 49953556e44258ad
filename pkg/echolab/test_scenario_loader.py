"""Tests for scenario parsing and validation"""
from pathlib import Path

import numpy as np
import pytest

from echolab.exceptions import ScenarioValidationError
from echolab.models import ModelName
from echolab.scenario_loader import build_models, build_observable, load_scenario, parse_scenario, resolved_config
from echolab.scenario_schemas import ExperimentKind

FIDELITY = {
    "name": "displaced_oscillator",
    "experiment": "fidelity",
    "model0": {"name": "harmonic"},
    "perturbation": {"name": "linear", "delta": 0.05},
    "z0": [1.0, 0.0],
    "hbar": 0.01,
    "times": {"t_max": 6.0, "n_samples": 13},
}

SCENARIO_TOML = """
name = "quartic_sweep"
experiment = "convergence"
hbar = [0.1, 0.05, 0.025]

[model0]
name = "quartic"

[perturbation]
name = "quadratic"
delta = 0.02

[times]
t_max = 3.0
n_samples = 31
"""


def _with(**changes):
    data = {**FIDELITY}
    data.update(changes)
    return data


def test_parse_fills_defaults():
    scenario = parse_scenario(FIDELITY)
    assert scenario.experiment == ExperimentKind.FIDELITY
    assert scenario.model0.name == ModelName.HARMONIC
    assert scenario.model0.dim == 1
    assert scenario.hbar_values == [0.01]
    assert len(scenario.times.grid()) == 13
    assert scenario.oracle.enabled


def test_resolved_config_is_json_ready():
    config = resolved_config(parse_scenario(FIDELITY))
    assert config["experiment"] == "fidelity"
    assert config["perturbation"] == {"name": "linear", "delta": 0.05}
    assert config["properties"]["samples"] == 1000


def test_unknown_key_names_the_field():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(_with(perturbaton={"name": "linear"}))
    assert info.value.field == "perturbaton"

    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(_with(times={"t_max": 1.0, "n_samples": 5, "step": 0.1}))
    assert info.value.field == "times.step"


def test_unknown_model_parameter():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(_with(model0={"name": "harmonic", "params": {"alpha": 1.0}}))
    assert "model0" in info.value.field
    assert "alpha" in str(info.value)


def test_unknown_model_name():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(_with(model0={"name": "morse"}))
    assert info.value.field == "model0.name"


@pytest.mark.parametrize("changes", [
    {"z0": [1.0, 0.0, 0.0]},
    {"hbar": -0.1},
    {"hbar": []},
    {"times": {"values": [0.0, 1.0, 0.5]}},
    {"times": {"values": [0.5, 1.0]}},
    {"times": {"t_max": 1.0}},
    {"times": None},
    {"model0": None},
    {"name": "has spaces"},
])
def test_invalid_scenarios(changes):
    with pytest.raises(ScenarioValidationError):
        parse_scenario(_with(**changes))


def test_convergence_needs_a_sweep():
    with pytest.raises(ScenarioValidationError):
        parse_scenario(_with(experiment="convergence"))
    scenario = parse_scenario(_with(experiment="convergence", hbar=[0.1, 0.05]))
    assert scenario.hbar_values == [0.1, 0.05]


def test_oracle_experiments_are_one_dimensional():
    with pytest.raises(ScenarioValidationError):
        parse_scenario(_with(experiment="egorov", model0={"name": "harmonic", "dim": 2}, z0=[1, 0, 0, 0]))
    with pytest.raises(ScenarioValidationError):
        parse_scenario(_with(experiment="egorov", oracle={"enabled": False}))


def test_oracle_grid_fields_go_together():
    with pytest.raises(ScenarioValidationError):
        parse_scenario(_with(oracle={"q_min": -2.0, "q_max": 2.0}))
    with pytest.raises(ScenarioValidationError):
        parse_scenario(_with(oracle={"q_min": -2.0, "q_max": 2.0, "n_points": 300}))
    scenario = parse_scenario(_with(oracle={"q_min": -2.0, "q_max": 2.0, "n_points": 512}))
    assert scenario.oracle.has_grid


def test_revival_section_checks():
    base = {"name": "rev", "experiment": "revival", "model0": {"name": "quartic"}}
    with pytest.raises(ScenarioValidationError):
        parse_scenario(base)
    with pytest.raises(ScenarioValidationError):
        parse_scenario({**base, "revival": {"window": [1.0, 0.5]}})
    with pytest.raises(ScenarioValidationError):
        parse_scenario({**base, "revival": {"window": [0.5, 1.0], "theta": 0.3, "theta_prime": 0.4}})
    with pytest.raises(ScenarioValidationError):
        parse_scenario({**base, "revival": {"window": [0.5, 1.0], "source": "explicit_formula"}})
    scenario = parse_scenario({**base, "revival": {"window": [0.5, 1.0]}})
    assert scenario.revival.center == 0.75
    assert scenario.times is None


def test_property_check_needs_no_model():
    scenario = parse_scenario({"name": "props", "experiment": "property-check", "properties": {"samples": 10}})
    assert scenario.model0 is None
    assert scenario.properties.dims == [1, 2, 3]


def test_load_scenario_from_toml(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(SCENARIO_TOML)
    scenario = load_scenario(path)
    assert scenario.name == "quartic_sweep"
    assert scenario.hbar_values == [0.1, 0.05, 0.025]
    model0, model_delta = build_models(scenario)
    assert model0.delta == 0.0
    assert model_delta.delta == 0.02


def test_load_scenario_errors(tmp_path):
    with pytest.raises(ScenarioValidationError):
        load_scenario(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("name = \n[model0")
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(broken)
    assert info.value.field == "scenario"


def test_build_observable():
    scenario = parse_scenario(_with(observable={"name": "bump", "center": 0.5, "width": 0.25}))
    model0, _ = build_models(scenario)
    observable = build_observable(scenario, model0)
    assert observable.symbol(np.array([0.5]), np.array([0.0]))[0] > 0
    energy = build_observable(parse_scenario(_with(observable={"name": "energy"})), model0)
    assert abs(energy.symbol(np.array([1.0]), np.array([1.0]))[0] - 1.0) < 1e-12


def test_shipped_scenarios_parse():
    paths = sorted((Path(__file__).resolve().parent.parent / "scenarios").glob("*.toml"))
    assert paths
    kinds = {load_scenario(path).experiment for path in paths}
    assert kinds == set(ExperimentKind)
