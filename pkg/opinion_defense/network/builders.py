"""
Influence-system construction, Schur stability and reachability checks
"""
import logging
from dataclasses import replace
from typing import Optional

import networkx as nx
import numpy as np
from scipy import linalg

from ..config import get_settings
from ..errors import ConfigError, NotSchurStable, SizeLimitExceeded
from .models import InfluenceSystem, StubbornnessProfile, UndirectedGraph

logger = logging.getLogger(__name__)


def schur_radius(A: np.ndarray) -> float:
    """rho(A) = max |eigenvalue|; for nonnegative A this is the Perron root"""
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(A))))


def validate_system(system: InfluenceSystem, tol_schur: Optional[float] = None) -> InfluenceSystem:
    """
    Check rho(A) < 1 - tol_schur and return the system with rho(A) recorded.

    Raises NotSchurStable when rho(A) >= 1 - tol_schur.
    """
    settings = get_settings()
    tol = settings.tol_schur if tol_schur is None else tol_schur
    if max(system.n, system.m) > settings.dense_limit:
        raise SizeLimitExceeded("system exceeds dense limit", n=system.n, m=system.m,
                                limit=settings.dense_limit)
    rho = schur_radius(system.A)
    if rho >= 1.0 - tol:
        raise NotSchurStable(rho=rho, tol=tol)
    logger.info(f"Validated influence system: n={system.n}, m={system.m}, rho(A)={rho:.6g}")
    return replace(system, spectral_radius_A=rho)


def build_friedkin_johnsen(graph: UndirectedGraph, stubbornness: StubbornnessProfile) -> InfluenceSystem:
    """A = [lambda] P, B = I - [lambda], one private source per agent"""
    if len(stubbornness) != graph.n:
        raise ConfigError("lambda length must equal node count", n=graph.n, lam=len(stubbornness))
    lam = stubbornness.values
    P = graph.transition_matrix()
    A = lam[:, None] * P
    B = np.diag(1.0 - lam)
    system = InfluenceSystem(
        A=A,
        B=B,
        agent_labels=graph.labels,
        source_labels=tuple(f"s{label}" for label in graph.labels),
        graph=graph,
        stubbornness=stubbornness,
    )
    return validate_system(system)


def reachability_pattern(system: InfluenceSystem) -> np.ndarray:
    """
    Boolean n x m matrix: True where source j is reachable from agent i in the
    graph with adjacency [[A, B], [0, I]] (walks through agents, then one B edge).
    """
    n, m = system.n, system.m
    g = nx.DiGraph()
    g.add_nodes_from(range(n + m))
    g.add_edges_from((int(i), int(j)) for i, j in np.argwhere(system.A > 0))
    g.add_edges_from((int(i), n + int(j)) for i, j in np.argwhere(system.B > 0))
    pattern = np.zeros((n, m), dtype=bool)
    for i in range(n):
        for target in nx.descendants(g, i):
            if target >= n:
                pattern[i, target - n] = True
    return pattern


def sum_irreducible(system: InfluenceSystem) -> bool:
    """A + A' irreducible, a sufficient condition for a connected source graph"""
    if system.n == 1:
        return True
    g = nx.from_numpy_array(((system.A + system.A.T) > 0).astype(float))
    return nx.is_connected(g)
