"""
Forward simulation of x(t+1) = A x(t) + B u and the displacement functional
"""
from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np

from ..errors import ConfigError, NoConvergence
from ..network.models import InfluenceSystem
from .spectral import ResponseModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Trajectory:
    state: np.ndarray
    steps: int
    last_step_size: float


def simulate(system: InfluenceSystem, u: np.ndarray, x0: Optional[np.ndarray] = None,
             tol: float = 1e-12, max_steps: int = 100_000) -> Trajectory:
    """Iterate the plant until successive states differ by at most tol (sup norm)"""
    u = np.asarray(u, dtype=float)
    if u.shape != (system.m,):
        raise ConfigError("input vector has wrong length", expected=system.m, got=u.shape)
    x = np.zeros(system.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    forcing = system.B @ u
    step = np.inf
    for t in range(1, max_steps + 1):
        x_next = system.A @ x + forcing
        step = float(np.max(np.abs(x_next - x)))
        x = x_next
        if step <= tol:
            return Trajectory(state=x, steps=t, last_step_size=step)
    raise NoConvergence("dynamics did not settle", steps=max_steps, last_step=step)


def displacement(nu: np.ndarray, omega: np.ndarray, model: ResponseModel) -> float:
    """Phi(nu, omega) = ||M [nu]^{-1/2} omega||^2"""
    x = model.M @ (np.asarray(omega, dtype=float) / np.sqrt(np.asarray(nu, dtype=float)))
    return float(x @ x)
