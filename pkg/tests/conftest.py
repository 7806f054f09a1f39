import os

# Perron-bound and order-swapped phi checks run on every call in the test suite
os.environ["OPDEF_CHECK_INVARIANTS"] = "1"

import networkx as nx
import numpy as np
import pytest

from opinion_defense.config import get_settings
from opinion_defense.network.builders import build_friedkin_johnsen, validate_system
from opinion_defense.network.generators import generate_graph
from opinion_defense.network.models import InfluenceSystem, StubbornnessProfile, UndirectedGraph
from opinion_defense.services.spectral import analyze


@pytest.fixture(autouse=True, scope="session")
def _settings():
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.check_invariants
    yield settings
    get_settings.cache_clear()


def fj_model(graph: UndirectedGraph, lam=0.5):
    """Friedkin-Johnsen response model on `graph` with uniform or per-node lambda"""
    profile = StubbornnessProfile(np.broadcast_to(np.asarray(lam, dtype=float), (graph.n,)).copy())
    return analyze(build_friedkin_johnsen(graph, profile))


def star_graph(n: int = 5) -> UndirectedGraph:
    """Node 0 is the hub"""
    return UndirectedGraph.from_networkx(nx.star_graph(n - 1), weight=None)


@pytest.fixture
def two_node_system():
    """A = [[0, 1/2], [1/2, 0]], B = I/2, so M = (1/3)[[2, 1], [1, 2]]"""
    return validate_system(InfluenceSystem(A=[[0.0, 0.5], [0.5, 0.0]], B=0.5 * np.eye(2)))


@pytest.fixture
def two_node_model(two_node_system):
    return analyze(two_node_system)


@pytest.fixture
def asymmetric_pair():
    """Two agents with different stubbornness: pi is unequal, so c0 > 1'd"""
    graph = UndirectedGraph(W=[[0.0, 1.0], [1.0, 0.0]])
    return graph, fj_model(graph, [0.5, 0.2])


@pytest.fixture
def cycle20():
    return UndirectedGraph.from_networkx(nx.cycle_graph(20), weight=None)


@pytest.fixture
def complete20():
    return UndirectedGraph.from_networkx(nx.complete_graph(20), weight=None)


@pytest.fixture
def star5():
    return star_graph(5)


@pytest.fixture(scope="session")
def er_corpus():
    """Five seeded Erdos-Renyi(1/4) Friedkin-Johnsen instances with n = 10"""
    corpus = []
    for seed in range(5):
        graph = generate_graph("er:0.25", 10, seed)
        corpus.append((graph, fj_model(graph)))
    return corpus


@pytest.fixture(scope="session")
def er_instance(er_corpus):
    return er_corpus[0]
