"""
Scenario Loader
Reads a TOML scenario file, validates it and resolves the named models
"""
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from pydantic import ValidationError

from echolab.exceptions import ScenarioValidationError
from echolab.models import (
    HamiltonianModel,
    Observable,
    bump_observable,
    build_model,
    energy_observable,
    momentum_observable,
    position_observable,
)
from echolab.scenario_schemas import ObservableName, Scenario

logger = logging.getLogger(__name__)


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    """Validate a scenario mapping; the first pydantic error becomes a ScenarioValidationError"""
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "scenario"
        raise ScenarioValidationError(field, first["msg"])


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioValidationError("scenario", f"file not found: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ScenarioValidationError("scenario", f"{path.name} is not valid TOML: {e}")
    scenario = parse_scenario(data)
    logger.info(f"✓ Loaded scenario '{scenario.name}' ({scenario.experiment.value}) from {path}")
    return scenario


def resolved_config(scenario: Scenario) -> Dict[str, Any]:
    """Every field with defaults filled in, JSON-ready"""
    return scenario.model_dump(mode="json")


def build_models(scenario: Scenario) -> Tuple[HamiltonianModel, HamiltonianModel]:
    """(H_0, H_delta) for the scenario"""
    section = scenario.model0
    model0 = build_model(section.name.value, params=section.params, dim=section.dim)
    model_delta = build_model(
        section.name.value,
        params=section.params,
        perturbation=scenario.perturbation.name.value,
        delta=scenario.perturbation.delta,
        dim=section.dim,
    )
    return model0, model_delta


def build_observable(scenario: Scenario, model: HamiltonianModel) -> Observable:
    section = scenario.observable
    if section.name == ObservableName.POSITION:
        return position_observable()
    if section.name == ObservableName.MOMENTUM:
        return momentum_observable()
    if section.name == ObservableName.ENERGY:
        return energy_observable(model)
    return bump_observable(section.center, section.width)
