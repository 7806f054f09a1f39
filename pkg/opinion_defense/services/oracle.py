"""
Independent verification paths for the waterfilling solver: projected gradient
on the budget slice, brute-force grid search for m <= 3, and random attacks.

Objective values here come from LAPACK (`scipy.linalg.eigh`), not from the
power iteration used by the solver.
"""
from dataclasses import dataclass, field
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from ..config import get_settings
from ..errors import BudgetInfeasible, ConfigError, DimensionTooLarge, NotConverged, NotIrreducible
from .dynamics import displacement
from .spectral import ResponseModel

logger = logging.getLogger(__name__)

METHOD_PROJECTED_GRADIENT = "projected_gradient"
METHOD_GRID = "grid"

ARMIJO = 1e-4
MAX_HALVINGS = 60


@dataclass(frozen=True, eq=False)
class OracleResult:
    nu: np.ndarray
    value: float
    iterations: int
    converged: bool
    method: str
    trace: List[float] = field(default_factory=list)
    grid_step: Optional[float] = None


def _phi_eigh(nu: np.ndarray, model: ResponseModel) -> Tuple[float, np.ndarray]:
    s = 1.0 / np.sqrt(nu)
    values, vectors = linalg.eigh(model.H * np.outer(s, s))
    omega = vectors[:, -1]
    return float(values[-1]), (omega if omega.sum() >= 0 else -omega)


def _gradient(nu: np.ndarray, omega: np.ndarray, model: ResponseModel) -> np.ndarray:
    z = model.M @ (omega / np.sqrt(nu))
    z /= np.linalg.norm(z)
    return -((model.M.T @ z) ** 2) / nu ** 2


def project_simplex(y: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = radius} (sort-based water level)"""
    if radius <= 0:
        return np.zeros_like(y, dtype=float)
    u = np.sort(y)[::-1]
    levels = (np.cumsum(u) - radius) / np.arange(1, y.size + 1)
    k = np.nonzero(levels < u)[0][-1]
    return np.maximum(y - levels[k], 0.0)


def project_budget_slice(y: np.ndarray, d: np.ndarray, c: float) -> np.ndarray:
    """Euclidean projection onto {nu >= d, 1'nu = c}"""
    return d + project_simplex(np.asarray(y, dtype=float) - d, c - float(d.sum()))


def _validate(d, c: float, model: ResponseModel, strict_budget: bool) -> np.ndarray:
    if not model.irreducible:
        raise NotIrreducible(model.components)
    d = np.asarray(d, dtype=float)
    if d.shape != (model.m,) or np.any(d <= 0):
        raise ConfigError("lower bounds must be positive with one entry per source")
    floor = float(d.sum())
    if c < floor or (strict_budget and c <= floor):
        raise BudgetInfeasible("budget must exceed the sum of lower bounds", c=c, minimum=floor)
    return d


def projected_gradient_minimize(d, c: float, model: ResponseModel, max_iter: Optional[int] = None,
                                tol: Optional[float] = None, strict: bool = False) -> OracleResult:
    """
    Minimize phi over {nu >= d, 1'nu = c} by projected gradient with Armijo
    backtracking (halving). Trial steps use the Barzilai-Borwein length.
    Stops when ||nu - Proj(nu - grad)|| <= tol.
    """
    settings = get_settings()
    max_iter = settings.oracle_max_iter if max_iter is None else max_iter
    tol = settings.oracle_tol if tol is None else tol
    d = _validate(d, c, model, strict_budget=True)
    m = model.m

    nu = d + (c - d.sum()) / m
    value, omega = _phi_eigh(nu, model)
    grad = _gradient(nu, omega, model)
    trace = [value]
    step = (c - d.sum()) / (m * max(float(np.abs(grad).max()), 1e-300))
    converged = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        gap = float(np.linalg.norm(nu - project_budget_slice(nu - grad, d, c)))
        if gap <= tol:
            converged = True
            break

        for _ in range(MAX_HALVINGS):
            candidate = project_budget_slice(nu - step * grad, d, c)
            move = candidate - nu
            cand_value, cand_omega = _phi_eigh(candidate, model)
            if cand_value <= value + ARMIJO * float(grad @ move) and cand_value < value:
                break
            step *= 0.5
        else:
            logger.debug(f"Line search stalled at iteration {iteration} (gap {gap:.3e})")
            break

        cand_grad = _gradient(candidate, cand_omega, model)
        s, r = move, cand_grad - grad
        curvature = float(s @ r)
        nu, value, omega, grad = candidate, cand_value, cand_omega, cand_grad
        trace.append(value)
        # Barzilai-Borwein length for the next trial step
        step = float(s @ s) / curvature if curvature > 0 else 2.0 * step

    if not converged:
        gap = float(np.linalg.norm(nu - project_budget_slice(nu - grad, d, c)))
        converged = gap <= tol
    if not converged:
        logger.warning(f"Projected gradient stopped after {iteration} iterations without reaching tol={tol:g}")
        if strict:
            raise NotConverged("projected gradient did not converge", iterations=iteration)
    return OracleResult(nu=nu, value=value, iterations=iteration, converged=converged,
                        method=METHOD_PROJECTED_GRADIENT, trace=trace)


def _grid_points(d: np.ndarray, c: float, resolution: int) -> Tuple[np.ndarray, float]:
    m = d.size
    surplus = c - float(d.sum())
    step = surplus / (resolution - 1)
    if m == 1:
        return np.array([[c]]), 0.0
    offsets = np.linspace(0.0, surplus, resolution)
    if m == 2:
        return np.column_stack([d[0] + offsets, d[1] + surplus - offsets]), step
    a, b = np.meshgrid(offsets, offsets, indexing="ij")
    a, b = a.ravel(), b.ravel()
    keep = a + b <= surplus * (1.0 + 1e-12)
    a, b = a[keep], b[keep]
    rest = np.maximum(surplus - a - b, 0.0)
    return np.column_stack([d[0] + a, d[1] + b, d[2] + rest]), step


def grid_search(d, c: float, model: ResponseModel, resolution: int = 300) -> OracleResult:
    """Exhaustive scan of {nu >= d, 1'nu = c} on a uniform grid (m <= 3)"""
    if model.m > 3:
        raise DimensionTooLarge("grid search supports at most 3 sources", m=model.m)
    if resolution < 100:
        raise ConfigError("grid resolution must be at least 100", resolution=resolution)
    d = _validate(d, c, model, strict_budget=False)

    points, step = _grid_points(d, c, resolution)
    scale = 1.0 / np.sqrt(points)
    stacked = model.H[None, :, :] * scale[:, :, None] * scale[:, None, :]
    values = np.linalg.eigvalsh(stacked)[:, -1]
    best = int(np.argmin(values))
    nu = points[best]
    value, _ = _phi_eigh(nu, model)
    logger.debug(f"Grid search over {len(points)} points: phi={value:.12g}")
    return OracleResult(nu=nu, value=value, iterations=len(points), converged=True,
                        method=METHOD_GRID, grid_step=step)


def attack_sample(nu, model: ResponseModel, trials: int, seed: int = 0) -> float:
    """
    Largest displacement over `trials` uniform unit attacks; trials=0 plays the
    dominant eigenvector instead. Never exceeds phi(nu).
    """
    nu = np.asarray(getattr(nu, "nu", nu), dtype=float)
    if trials == 0:
        _, omega = _phi_eigh(nu, model)
        return displacement(nu, omega, model)
    if trials < 0:
        raise ConfigError("trials must be non-negative", trials=trials)
    rng = np.random.default_rng(seed)
    omegas = rng.standard_normal((trials, model.m))
    omegas /= np.linalg.norm(omegas, axis=1, keepdims=True)
    states = (omegas / np.sqrt(nu)) @ model.M.T
    return float(np.max(np.einsum("ij,ij->i", states, states)))
