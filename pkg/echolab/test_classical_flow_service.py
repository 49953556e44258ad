"""Tests for classical trajectories, orbit integrals and the classical echo"""
import numpy as np
import pytest

from echolab.classical_flow_service import ClassicalFlowService
from echolab.exceptions import NonConfiningError, SingularOrbitError
from echolab.models import POTENTIALS, build_model
from echolab.symplectic_core import rotation

flows = ClassicalFlowService()

LONG_TIMES = np.linspace(0.0, 20.0, 201)
CONFINING = ["harmonic", "quartic", "anharmonic", "pendulum", "double_well"]
START = {
    "harmonic": [1.0, 0.0],
    "quartic": [1.0, 0.0],
    "anharmonic": [1.0, 0.5],
    "pendulum": [0.5, 0.0],
    "double_well": [1.5, 0.0],
}


def test_harmonic_quarter_period():
    model = build_model("harmonic")
    bundle = flows.evolve(model, np.array([1.0, 0.0]), np.array([0.0, np.pi / 2]))
    assert np.allclose(bundle.points[-1], [0.0, -1.0], atol=1e-10)
    assert np.allclose(bundle.stability[-1], rotation(np.pi / 2), atol=1e-10)


def test_harmonic_action_phase_vanishes():
    model = build_model("harmonic")
    bundle = flows.evolve(model, np.array([0.7, -1.3]), np.linspace(0.0, 5.0, 11))
    assert np.max(np.abs(bundle.action)) < 1e-10


def test_bundle_initial_values():
    model = build_model("pendulum")
    bundle = flows.evolve(model, np.array([0.5, 0.1]), np.linspace(0.0, 1.0, 5))
    assert np.array_equal(bundle.stability[0], np.eye(2))
    assert np.array_equal(bundle.points[0], [0.5, 0.1])
    assert bundle.action[0] == 0.0


@pytest.mark.parametrize("name", CONFINING)
def test_integrator_gates(name):
    """Symplecticity defect <= 1e-8 and energy drift <= 1e-9 over t in [0, 20]"""
    model = build_model(name)
    bundle = flows.evolve(model, np.array(START[name]), LONG_TIMES)
    assert bundle.symplecticity_defect <= 1e-8
    assert bundle.energy_drift <= 1e-9 * max(1.0, abs(bundle.energy[0]))


def test_flow_composition_and_action_additivity():
    model = build_model("anharmonic")
    z0 = np.array([1.0, 0.5])
    full = flows.evolve(model, z0, np.array([0.0, 1.3, 3.0]))
    second = flows.evolve(model, full.points[1], np.array([0.0, 1.7]))
    assert np.allclose(second.points[-1], full.points[-1], atol=1e-8)
    # gamma_{t1+t2}(z) = gamma_{t1}(z) + gamma_{t2}(z_{t1}) for autonomous H
    assert abs(full.action[-1] - (full.action[1] + second.action[-1])) < 1e-8


def test_harmonic_action_and_period():
    model = build_model("harmonic")
    action, period = flows.action_and_period(model, 1.0)
    assert abs(action - 2 * np.pi) < 1e-8
    assert abs(period - 2 * np.pi) < 1e-8


@pytest.mark.parametrize("bracket", [None, (-3.0, 3.0)])
def test_harmonic_turning_points(bracket):
    q_minus, q_plus = flows.turning_points(build_model("harmonic"), 0.5, bracket)
    assert abs(q_minus + 1.0) < 1e-12
    assert abs(q_plus - 1.0) < 1e-12


def test_quartic_action_scaling():
    model = build_model("quartic")
    ratio = flows.action(model, 16.0) / flows.action(model, 1.0)
    assert abs(ratio - 8.0) < 1e-6


def test_period_is_action_derivative():
    model = build_model("anharmonic")
    E, h = 0.8, 1e-4
    derivative = (flows.action(model, E + h) - flows.action(model, E - h)) / (2 * h)
    assert abs(derivative - flows.period(model, E)) < 1e-6


def test_pendulum_period_matches_orbit():
    model = build_model("pendulum")
    E = -0.5
    period = flows.period(model, E)
    z0 = np.array([0.0, np.sqrt(2 * (E + 1.0))])
    returned = flows.flow_point(model, z0, period)
    assert np.allclose(returned, z0, atol=1e-6)


def test_orbit_errors():
    with pytest.raises(NonConfiningError):
        flows.action(build_model("pendulum"), 1.5)
    with pytest.raises(NonConfiningError):
        flows.action(build_model("harmonic"), -1.0)
    with pytest.raises(SingularOrbitError):
        flows.turning_points(build_model("double_well"), 0.25)


def test_classical_echo_identities():
    model = build_model("quartic")
    X = np.array([0.8, -0.2])
    assert np.allclose(flows.classical_echo(model, model, X, 2.0), X, atol=1e-9)
    perturbed = model.with_delta(0.1)
    assert np.array_equal(flows.classical_echo(model, perturbed, X, 0.0), X)


def test_classical_echo_displaced_oscillator():
    model0 = build_model("harmonic")
    model_delta = build_model("harmonic", perturbation="linear", delta=0.1)
    echoed = flows.classical_echo(model0, model_delta, np.array([1.0, 0.0]), np.pi)
    assert np.allclose(echoed, [1.2, 0.0], atol=1e-9)


def test_validity_horizon_and_indicator():
    assert abs(flows.validity_horizon(1.0, 1e-3, eps=0.1) - 0.15 * np.log(1e3)) < 1e-12
    assert abs(flows.validity_horizon(0.0, 1e-3, eps=0.1, integrable=True) - 1e-3 ** (-1 / 6 + 0.1)) < 1e-12
    assert flows.ehrenfest_indicator(np.eye(2), 0.0, 0.01) == pytest.approx(0.1)


@pytest.mark.parametrize("name", sorted(POTENTIALS))
def test_lyapunov_estimate_finite(name):
    bundle = flows.evolve(build_model(name), np.array([0.5, 0.2]), np.linspace(0.0, 2.0, 5))
    assert np.isfinite(bundle.lyapunov_estimate)
