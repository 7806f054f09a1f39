from functools import lru_cache

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import fj_model
from opinion_defense.network.builders import validate_system
from opinion_defense.network.generators import generate_graph
from opinion_defense.network.models import InfluenceSystem
from opinion_defense.services.oracle import project_budget_slice, project_simplex
from opinion_defense.services.solver import phi
from opinion_defense.services.spectral import analyze

property_settings = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(min_value=0, max_value=40)
weights = arrays(np.float64, 8, elements=st.floats(min_value=0.2, max_value=5.0))


@lru_cache(maxsize=None)
def instance(seed: int):
    return fj_model(generate_graph("er:0.4", 8, seed))


@property_settings
@given(seeds, weights, st.floats(min_value=0.1, max_value=10.0))
def test_phi_is_homogeneous(seed, nu, alpha):
    model = instance(seed)
    assert np.isclose(phi(alpha * nu, model)[0], phi(nu, model)[0] / alpha, rtol=1e-10, atol=0.0)


@property_settings
@given(seeds, weights, weights)
def test_phi_is_midpoint_convex(seed, nu1, nu2):
    model = instance(seed)
    mid = phi(0.5 * (nu1 + nu2), model)[0]
    v1, v2 = phi(nu1, model)[0], phi(nu2, model)[0]
    assert mid <= 0.5 * (v1 + v2) + 1e-10 * max(v1, v2)


@property_settings
@given(seeds, weights, st.integers(min_value=0, max_value=7), st.floats(min_value=0.1, max_value=3.0))
def test_phi_strictly_decreasing_in_each_coordinate(seed, nu, i, t):
    model = instance(seed)
    bumped = nu.copy()
    bumped[i] += t * nu[i]
    assert phi(bumped, model)[0] < phi(nu, model)[0]


@property_settings
@given(seeds, st.floats(min_value=0.1, max_value=50.0))
def test_centrality_ignores_input_scale(seed, alpha):
    graph = generate_graph("er:0.4", 8, seed)
    base = fj_model(graph)
    scaled = analyze(validate_system(InfluenceSystem(A=0.5 * graph.transition_matrix(), B=0.5 * alpha * np.eye(8))))
    np.testing.assert_allclose(scaled.pi, base.pi, rtol=1e-10)
    np.testing.assert_allclose(scaled.total_mass, alpha ** 2 * base.total_mass, rtol=1e-10)


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, st.integers(min_value=1, max_value=4), elements=st.floats(min_value=-10.0, max_value=10.0)),
    st.floats(min_value=0.0, max_value=20.0),
)
def test_simplex_projection_water_level(y, radius):
    x = project_simplex(y, radius)
    assert np.all(x >= 0.0)
    assert np.isclose(x.sum(), radius, rtol=1e-12, atol=1e-9)
    positive = x > 0
    if np.any(positive):
        # one water level tau with x = max(y - tau, 0)
        tau = y[positive] - x[positive]
        assert np.allclose(tau, tau.mean(), atol=1e-9)
        assert np.all(y[~positive] <= tau.mean() + 1e-9)


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, 4, elements=st.floats(min_value=-10.0, max_value=10.0)),
    arrays(np.float64, 4, elements=st.floats(min_value=0.1, max_value=2.0)),
    st.floats(min_value=0.0, max_value=10.0),
)
def test_budget_slice_projection_is_nearest_point(y, d, surplus):
    c = float(d.sum()) + surplus
    x = project_budget_slice(y, d, c)
    assert np.all(x >= d - 1e-12)
    assert np.isclose(x.sum(), c, rtol=1e-12, atol=1e-9)
    # no sampled feasible point is closer to y
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = d + surplus * rng.dirichlet(np.ones(4))
        assert np.linalg.norm(x - y) <= np.linalg.norm(z - y) + 1e-9
