import numpy as np
import pytest

from conftest import fj_model
from opinion_defense.config import get_settings
from opinion_defense.errors import (
    ConfigError,
    NoConvergence,
    SingularSystem,
    SizeLimitExceeded,
    ZeroMass,
)
from opinion_defense.network.builders import validate_system
from opinion_defense.network.models import InfluenceSystem
from opinion_defense.services.spectral import (
    analyze,
    components,
    compute_H_and_centrality,
    compute_M,
    full_symmetric_eigendecomposition,
    neumann_partial_sum,
    spectral_radius,
)


class TestResponseMatrix:
    def test_fully_stubborn_is_identity(self):
        system = validate_system(InfluenceSystem(A=np.zeros((3, 3)), B=np.eye(3)))
        np.testing.assert_array_equal(compute_M(system), np.eye(3))

    def test_two_node_closed_form(self, two_node_system):
        expected = np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0
        np.testing.assert_allclose(compute_M(two_node_system), expected, atol=1e-12)

    def test_neumann_series_agrees(self, two_node_system, er_instance):
        np.testing.assert_allclose(
            neumann_partial_sum(two_node_system.A, two_node_system.B, 200),
            compute_M(two_node_system),
            atol=1e-12,
        )
        graph, model = er_instance
        # rho(A) <= 1/2, so 120 terms leave a tail below 2^-120
        A = 0.5 * graph.transition_matrix()
        np.testing.assert_allclose(neumann_partial_sum(A, 0.5 * np.eye(graph.n), 120), model.M, atol=1e-12)

    def test_singular_system(self):
        # bypasses validate_system on purpose
        system = InfluenceSystem(A=[[1.0]], B=[[1.0]])
        with pytest.raises(SingularSystem) as exc:
            compute_M(system)
        assert exc.value.exit_code == 3


class TestCentrality:
    def test_regular_graph_uniform_centrality(self, cycle20, complete20):
        for graph in (cycle20, complete20):
            model = fj_model(graph)
            np.testing.assert_allclose(model.pi, np.full(20, 0.05), atol=1e-10)
            np.testing.assert_allclose(model.H.sum(axis=1), 1.0, atol=1e-10)
            assert model.total_mass == pytest.approx(20.0, rel=1e-10)
            assert model.irreducible

    def test_identity_response_is_reducible(self):
        model = compute_H_and_centrality(np.eye(4))
        np.testing.assert_array_equal(model.H, np.eye(4))
        np.testing.assert_allclose(model.pi, 0.25)
        assert not model.irreducible
        assert components(model) == [[0], [1], [2], [3]]

    def test_block_diagonal_flags_two_components(self):
        block = np.array([[0.0, 0.5], [0.5, 0.0]])
        A = np.block([[block, np.zeros((2, 2))], [np.zeros((2, 2)), block]])
        model = analyze(validate_system(InfluenceSystem(A=A, B=0.5 * np.eye(4))))
        assert not model.irreducible
        assert model.components == [[0, 1], [2, 3]]

    def test_single_source(self):
        model = compute_H_and_centrality(np.array([[0.3], [0.7]]))
        np.testing.assert_array_equal(model.pi, [1.0])
        assert model.irreducible

    def test_h_is_gram_matrix(self, er_instance):
        _, model = er_instance
        np.testing.assert_allclose(model.H, model.M.T @ model.M, rtol=1e-12, atol=1e-15)
        assert np.all(model.pi > 0)
        assert model.pi.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(model.H).min() > -1e-12

    def test_zero_mass(self):
        with pytest.raises(ZeroMass):
            compute_H_and_centrality(np.zeros((2, 2)))

    def test_negative_response_rejected(self):
        with pytest.raises(ConfigError):
            compute_H_and_centrality(np.array([[1.0, -0.5]]))


class TestPowerIteration:
    def test_diagonal(self):
        pair = spectral_radius(np.diag([3.0, 1.0]))
        assert pair.value == pytest.approx(3.0, rel=1e-12)
        np.testing.assert_allclose(pair.vector, [1.0, 0.0], atol=1e-6)

    def test_two_by_two(self):
        pair = spectral_radius(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert pair.value == pytest.approx(3.0, rel=1e-13)
        np.testing.assert_allclose(pair.vector, np.full(2, 1.0 / np.sqrt(2.0)), atol=1e-12)

    def test_matches_characteristic_root(self, two_node_model):
        H = two_node_model.H
        tr, det = np.trace(H), np.linalg.det(H)
        root = 0.5 * (tr + np.sqrt(tr ** 2 - 4.0 * det))
        assert spectral_radius(H).value == pytest.approx(root, rel=1e-12)

    def test_unit_vector_and_residual(self, er_instance):
        _, model = er_instance
        pair = spectral_radius(model.H)
        assert np.linalg.norm(pair.vector) == pytest.approx(1.0, abs=1e-12)
        assert pair.residual_norm <= 1e-10 * pair.value
        assert pair.value == pytest.approx(np.linalg.eigvalsh(model.H)[-1], rel=1e-10)

    def test_zero_matrix(self):
        assert spectral_radius(np.zeros((3, 3))).value == 0.0

    def test_iteration_cap(self):
        with pytest.raises(NoConvergence):
            spectral_radius(np.diag([3.0, 1.0]), max_iter=1)

    def test_deterministic(self, er_instance):
        _, model = er_instance
        a, b = spectral_radius(model.H), spectral_radius(model.H)
        assert a.value == b.value and a.iterations == b.iterations


class TestEigendecomposition:
    def test_identity(self):
        values, _ = full_symmetric_eigendecomposition(np.eye(3))
        np.testing.assert_allclose(values, [1.0, 1.0, 1.0])

    def test_two_by_two(self):
        values, _ = full_symmetric_eigendecomposition(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(values, [3.0, 1.0], atol=1e-14)

    def test_random_symmetric(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((8, 8))
        Q = X + X.T
        values, V = full_symmetric_eigendecomposition(Q)
        assert np.all(np.diff(values) <= 0)
        np.testing.assert_allclose(V.T @ V, np.eye(8), atol=1e-10)
        assert np.linalg.norm(Q - V @ np.diag(values) @ V.T) <= 1e-10 * np.linalg.norm(Q)

    def test_size_limit(self, monkeypatch):
        monkeypatch.setattr(get_settings(), "dense_limit", 2)
        with pytest.raises(SizeLimitExceeded):
            full_symmetric_eigendecomposition(np.eye(3))

    def test_rejects_asymmetric(self):
        with pytest.raises(ConfigError):
            full_symmetric_eigendecomposition(np.array([[1.0, 2.0], [0.0, 1.0]]))
