"""
Domain models for influence networks
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from ..errors import ConfigError, NegativeWeight, AsymmetryError, ZeroDegreeNode


def _frozen(array, name: str, ndim: int) -> np.ndarray:
    """Copy to a read-only float array of the expected rank"""
    arr = np.array(array, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ConfigError(f"{name} must be {ndim}-dimensional", shape=arr.shape)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def _default_labels(prefix: str, count: int) -> Tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(count))


@dataclass(frozen=True, eq=False)
class InfluenceSystem:
    """
    Plant x(t+1) = A x(t) + B u with n regular agents and m sources.

    Construction only checks shapes and signs; Schur stability is verified by
    `builders.validate_system` before any downstream use.
    """
    A: np.ndarray
    B: np.ndarray
    agent_labels: Tuple[str, ...] = ()
    source_labels: Tuple[str, ...] = ()
    graph: Optional["UndirectedGraph"] = None
    stubbornness: Optional["StubbornnessProfile"] = None
    spectral_radius_A: Optional[float] = None

    def __post_init__(self):
        A = _frozen(self.A, "A", 2)
        B = _frozen(self.B, "B", 2)
        n, m = B.shape
        if A.shape != (n, n):
            raise ConfigError("A must be n x n with n = rows of B", A=A.shape, B=B.shape)
        if n < 1 or m < 1:
            raise ConfigError("need at least one agent and one source", n=n, m=m)
        if np.any(A < 0):
            raise NegativeWeight("A has negative entries", field="A")
        if np.any(B < 0):
            raise NegativeWeight("B has negative entries", field="B")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "agent_labels", tuple(self.agent_labels) or _default_labels("agent", n))
        object.__setattr__(self, "source_labels", tuple(self.source_labels) or _default_labels("source", m))
        if len(self.agent_labels) != n or len(self.source_labels) != m:
            raise ConfigError("label count does not match matrix shape")

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    """Symmetric nonnegative adjacency W with positive weighted degrees"""
    W: np.ndarray
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        W = _frozen(self.W, "W", 2)
        if W.shape[0] != W.shape[1]:
            raise ConfigError("W must be square", shape=W.shape)
        if W.shape[0] < 1:
            raise ConfigError("graph needs at least one node")
        if np.any(W < 0):
            raise NegativeWeight("W has negative entries", field="W")
        if not np.array_equal(W, W.T):
            i, j = np.argwhere(W != W.T)[0]
            raise AsymmetryError(
                f"W[{i + 1},{j + 1}]={W[i, j]} differs from W[{j + 1},{i + 1}]={W[j, i]}", field="W"
            )
        degrees = W.sum(axis=1)
        if np.any(degrees <= 0):
            isolated = [int(i) + 1 for i in np.flatnonzero(degrees <= 0)]
            raise ZeroDegreeNode("nodes without neighbours cannot be row-normalized", nodes=isolated)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "labels", tuple(self.labels) or _default_labels("", W.shape[0]))

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        """Weighted degree w_i = sum_j W_ij"""
        return self.W.sum(axis=1)

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.W)))

    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic P with P_ij = W_ij / w_i"""
        return self.W / self.degrees[:, None]

    def to_networkx(self) -> nx.Graph:
        return nx.from_numpy_array(np.asarray(self.W))

    @classmethod
    def from_networkx(cls, g: nx.Graph, weight: Optional[str] = "weight") -> "UndirectedGraph":
        nodes = sorted(g.nodes())
        W = nx.to_numpy_array(g, nodelist=nodes, weight=weight)
        return cls(W=W, labels=tuple(str(v) for v in nodes))


@dataclass(frozen=True, eq=False)
class StubbornnessProfile:
    """Susceptibility lambda_i in [0, 1]; 1 - lambda_i is the anchor weight"""
    values: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.values, "lambda", 1)
        if lam.size < 1:
            raise ConfigError("lambda profile is empty")
        if np.any(lam < 0) or np.any(lam > 1):
            raise ConfigError("lambda entries must lie in [0, 1]",
                              bad=[int(i) + 1 for i in np.flatnonzero((lam < 0) | (lam > 1))])
        object.__setattr__(self, "values", lam)

    @classmethod
    def uniform(cls, n: int, value: float = 0.5) -> "StubbornnessProfile":
        return cls(np.full(n, float(value)))

    def __len__(self) -> int:
        return self.values.size
