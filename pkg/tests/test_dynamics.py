import numpy as np
import pytest

from opinion_defense.errors import ConfigError, NoConvergence
from opinion_defense.network.builders import build_friedkin_johnsen
from opinion_defense.network.models import StubbornnessProfile
from opinion_defense.services.dynamics import displacement, simulate
from opinion_defense.services.solver import phi


def test_simulation_settles_at_response(two_node_system, two_node_model):
    u = np.array([1.0, -2.0])
    trajectory = simulate(two_node_system, u)
    np.testing.assert_allclose(trajectory.state, two_node_model.M @ u, atol=1e-11)
    assert trajectory.last_step_size <= 1e-12


def test_equilibrium_is_independent_of_start(two_node_system):
    u = np.array([0.3, 0.9])
    a = simulate(two_node_system, u, x0=np.zeros(2)).state
    b = simulate(two_node_system, u, x0=np.array([5.0, -5.0])).state
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_step_cap(two_node_system):
    with pytest.raises(NoConvergence):
        simulate(two_node_system, np.ones(2), max_steps=1)


def test_input_length(two_node_system):
    with pytest.raises(ConfigError):
        simulate(two_node_system, np.ones(3))


def test_displacement_is_quadratic_form(er_instance):
    _, model = er_instance
    rng = np.random.default_rng(0)
    nu = rng.uniform(0.5, 2.0, model.m)
    omega = rng.standard_normal(model.m)
    omega /= np.linalg.norm(omega)
    s = 1.0 / np.sqrt(nu)
    expected = omega @ (model.H * np.outer(s, s)) @ omega
    assert displacement(nu, omega, model) == pytest.approx(expected, rel=1e-12)
    assert displacement(nu, omega, model) <= phi(nu, model)[0] + 1e-12


def test_displacement_matches_simulated_state(er_instance):
    graph, model = er_instance
    system = build_friedkin_johnsen(graph, StubbornnessProfile.uniform(graph.n))
    nu = np.full(model.m, 2.0)
    omega = np.full(model.m, 1.0 / np.sqrt(model.m))
    x = simulate(system, omega / np.sqrt(nu)).state
    assert x @ x == pytest.approx(displacement(nu, omega, model), rel=1e-9)
