"""
Static analysis of an influence system: response matrix M, source interaction
matrix H = M'M, input centrality pi, and the eigen-solvers the solver relies on.
"""
from dataclasses import dataclass, field
import logging
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import linalg

from ..config import get_settings
from ..errors import (
    ConfigError,
    NoConvergence,
    SingularSystem,
    SizeLimitExceeded,
    SolverInvariantError,
    ZeroMass,
)
from ..network.models import InfluenceSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ResponseModel:
    """M, H, pi and the source-connectivity flag for one influence system"""
    M: np.ndarray
    H: np.ndarray
    pi: np.ndarray
    total_mass: float
    irreducible: bool
    components: List[List[int]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def m(self) -> int:
        return self.M.shape[1]


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray
    residual_norm: float
    iterations: int


def compute_M(system: InfluenceSystem, clamp_tol: Optional[float] = None) -> np.ndarray:
    """
    Solve (I - A) M = B by dense LU. Round-off negatives down to -clamp_tol are
    zeroed; anything more negative means the system is not a valid plant.
    """
    tol = get_settings().clamp_tol if clamp_tol is None else clamp_tol
    n = system.n
    I_minus_A = np.eye(n) - system.A
    try:
        lu, piv = linalg.lu_factor(I_minus_A, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f"LU factorization of I - A failed: {e}")
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(1.0, pivots.max()) * n:
        raise SingularSystem("I - A is numerically singular", min_pivot=float(pivots.min()))
    M = linalg.lu_solve((lu, piv), system.B)

    negative = M < 0
    if np.any(negative):
        worst = float(M[negative].min())
        if worst < -tol:
            raise SolverInvariantError("response matrix has negative entries", min_entry=worst)
        logger.debug(f"Clamping {int(negative.sum())} round-off negatives in M (min {worst:.2e})")
        M = np.where(negative, 0.0, M)
    return M


def neumann_partial_sum(A: np.ndarray, B: np.ndarray, terms: int) -> np.ndarray:
    """sum_{k < terms} A^k B"""
    total = np.zeros_like(B, dtype=float)
    term = np.array(B, dtype=float)
    for _ in range(terms):
        total += term
        term = A @ term
    return total


def source_components(H: np.ndarray) -> List[List[int]]:
    """Connected components of the source graph (edges where H_ij > 0, i != j)"""
    g = nx.Graph()
    g.add_nodes_from(range(H.shape[0]))
    rows, cols = np.nonzero(np.triu(H, k=1) > 0)
    g.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return sorted(sorted(c) for c in nx.connected_components(g))


def components(model: ResponseModel) -> List[List[int]]:
    return [list(c) for c in model.components]


def compute_H_and_centrality(M: np.ndarray) -> ResponseModel:
    """H = M'M and pi = H1 / 1'H1, plus connectivity of the source graph"""
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise ConfigError("M must be nonnegative")
    H = M.T @ M
    H = 0.5 * (H + H.T)
    degree = H.sum(axis=1)
    total = float(degree.sum())
    if not total > 0:
        raise ZeroMass("1'H1 is zero; the response matrix carries no signal")
    components = source_components(H)
    model = ResponseModel(
        M=M,
        H=H,
        pi=degree / total,
        total_mass=total,
        irreducible=len(components) == 1,
        components=components,
    )
    for arr in (model.M, model.H, model.pi):
        arr.setflags(write=False)
    return model


def analyze(system: InfluenceSystem) -> ResponseModel:
    """compute_M followed by compute_H_and_centrality"""
    model = compute_H_and_centrality(compute_M(system))
    if model.irreducible:
        logger.info(f"Response model: m={model.m}, 1'H1={model.total_mass:.6g}, min pi={model.pi.min():.6g}")
    else:
        logger.warning(f"Source graph has {len(model.components)} components; sources are not connected")
    return model


def _check_perron_bounds(Q: np.ndarray, value: float) -> None:
    lower = float(np.max(np.diag(Q)))
    upper = float(np.max(Q.sum(axis=1)))
    slack = 1e-9 * max(1.0, abs(upper))
    if value < lower - slack or value > upper + slack:
        raise SolverInvariantError("dominant eigenvalue outside Perron bounds",
                                   value=value, lower=lower, upper=upper)


def spectral_radius(Q: np.ndarray, max_iter: Optional[int] = None) -> EigenPair:
    """
    Dominant eigenpair of a symmetric nonnegative matrix by power iteration.

    Starts from 1/sqrt(m); stops when the Rayleigh quotient changes by at most
    power_rel_tol (relative) and ||Qv - value*v|| <= power_residual_tol * value.
    """
    settings = get_settings()
    cap = settings.power_max_iter if max_iter is None else max_iter
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    if Q.shape != (m, m):
        raise ConfigError("matrix must be square", shape=Q.shape)

    x = np.full(m, 1.0 / np.sqrt(m))
    y = Q @ x
    value = float(x @ y)
    previous = np.inf
    residual = float(np.linalg.norm(y - value * x))

    for iteration in range(1, cap + 1):
        y_norm = float(np.linalg.norm(y))
        if y_norm == 0.0:
            # Q x = 0 from a positive start: Q is the zero matrix on this support
            return EigenPair(value=0.0, vector=x, residual_norm=0.0, iterations=iteration)
        residual = float(np.linalg.norm(y - value * x))
        if (abs(value - previous) <= settings.power_rel_tol * abs(value)
                and residual <= settings.power_residual_tol * abs(value)):
            if settings.check_invariants:
                _check_perron_bounds(Q, value)
            return EigenPair(value=value, vector=x, residual_norm=residual, iterations=iteration)
        x = y / y_norm
        y = Q @ x
        previous, value = value, float(x @ y)

    raise NoConvergence("power iteration did not converge", iterations=cap, residual=residual)


def full_symmetric_eigendecomposition(Q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors (columns) of symmetric Q"""
    Q = np.asarray(Q, dtype=float)
    limit = get_settings().dense_limit
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ConfigError("matrix must be square", shape=Q.shape)
    if Q.shape[0] > limit:
        raise SizeLimitExceeded("matrix too large for dense eigendecomposition", size=Q.shape[0], limit=limit)
    scale = max(1.0, float(np.abs(Q).max(initial=0.0)))
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12 * scale):
        raise ConfigError("matrix is not symmetric")
    values, vectors = linalg.eigh(0.5 * (Q + Q.T))
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]
