"""
Defender objective and the exact waterfilling solver.

phi(nu) is the worst-case displacement over unit attacks, i.e. the dominant
eigenvalue of [nu]^{-1/2} H [nu]^{-1/2}. Above the threshold c0 = max_i d_i/pi_i
the optimum is c*pi; below it, components saturate at d regime by regime and
each regime is solved in closed form up to one scalar (secular) equation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from ..config import get_settings
from ..errors import (
    BracketFailure,
    BudgetInfeasible,
    BudgetTooSmall,
    ConfigError,
    EmptyActiveSet,
    NonPositiveBudget,
    NonPositiveNu,
    NotIrreducible,
    SolverInvariantError,
)
from ..network.models import UndirectedGraph
from .dynamics import displacement
from .spectral import (
    ResponseModel,
    compute_H_and_centrality,
    full_symmetric_eigendecomposition,
    spectral_radius,
)

logger = logging.getLogger(__name__)


def _feasibility_tol(c: float) -> float:
    return 1e-9 * max(1.0, abs(c))


@dataclass(frozen=True, eq=False)
class ProtectionVector:
    """nu with its budget c and lower bounds d (d is None for the unbounded problem)"""
    nu: np.ndarray
    c: float
    d: Optional[np.ndarray] = None

    def __post_init__(self):
        nu = np.array(self.nu, dtype=float)
        if nu.ndim != 1 or nu.size < 1:
            raise ConfigError("protection vector must be a non-empty 1-d array")
        if np.any(nu <= 0):
            raise NonPositiveNu("protection weights must be strictly positive")
        tol = _feasibility_tol(self.c)
        if nu.sum() > self.c + tol:
            raise BudgetInfeasible("protection vector exceeds budget", total=float(nu.sum()), c=self.c)
        if self.d is not None:
            d = np.array(self.d, dtype=float)
            if d.shape != nu.shape:
                raise ConfigError("lower bounds and protection vector differ in length")
            if np.any(nu < d - tol):
                raise BudgetInfeasible("protection vector violates lower bounds",
                                       worst=float((nu - d).min()))
            d.setflags(write=False)
            object.__setattr__(self, "d", d)
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True, eq=False)
class SolveReport:
    nu: np.ndarray
    c: float
    value: float
    active_set: List[int]
    attacker_response: np.ndarray
    kkt_residual: float
    regime_index: int


@dataclass(eq=False)
class BudgetSchedule:
    """
    Breakpoints c0 > c1 > ... > cs = 1'd and the active set on the interval just
    above each breakpoint: active_sets[0] = all sources (c > c0), active_sets[k]
    for c in (c^k, c^{k-1}].
    """
    breakpoints: List[float]
    active_sets: List[List[int]]
    solvers: List[Optional["RestrictedSolver"]]
    d: np.ndarray
    pi: np.ndarray

    @property
    def high_budget_threshold(self) -> float:
        return self.breakpoints[0]

    @property
    def regime_count(self) -> int:
        return len(self.breakpoints) - 1

    def regime_of(self, c: float) -> int:
        """-1 above c0, k for c in (c^{k+1}, c^k], last index at c = 1'd"""
        if c >= self.breakpoints[0]:
            return -1
        for k in range(len(self.breakpoints) - 1):
            if c > self.breakpoints[k + 1]:
                return k
        return len(self.breakpoints) - 2

    def evaluate(self, c: float) -> np.ndarray:
        """nu*(c) by regime lookup"""
        floor = float(self.d.sum())
        if c < floor - _feasibility_tol(floor):
            raise BudgetInfeasible("budget below 1'd", c=c, minimum=floor)
        if c >= self.breakpoints[0]:
            return c * self.pi
        if c <= floor:
            return self.d.copy()
        solver = self.solvers[self.regime_of(c) + 1]
        if solver is None:
            # c0 coincides with 1'd up to rounding
            return c * self.pi
        nu, _ = solver.solve(c)
        return nu


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def _require_irreducible(model: ResponseModel) -> None:
    if not model.irreducible:
        raise NotIrreducible(model.components)


def _as_array(nu) -> np.ndarray:
    return np.asarray(nu.nu if isinstance(nu, ProtectionVector) else nu, dtype=float)


def _scaled_H(nu: np.ndarray, model: ResponseModel) -> np.ndarray:
    s = 1.0 / np.sqrt(nu)
    return model.H * np.outer(s, s)


def phi_alt(nu, model: ResponseModel) -> float:
    """rho(M [nu]^{-1} M'), the order-swapped form of phi"""
    nu = _as_array(nu)
    K = (model.M / nu) @ model.M.T
    return spectral_radius(0.5 * (K + K.T)).value


def phi(nu, model: ResponseModel, require_irreducible: bool = True) -> Tuple[float, np.ndarray]:
    """Worst-case displacement and the attacker's optimal unit input omega*"""
    if require_irreducible:
        _require_irreducible(model)
    nu = _as_array(nu)
    if nu.shape != (model.m,):
        raise ConfigError("protection vector has wrong length", expected=model.m, got=nu.shape)
    if np.any(nu <= 0):
        raise NonPositiveNu("protection weights must be strictly positive")
    pair = spectral_radius(_scaled_H(nu, model))
    if get_settings().check_invariants:
        other = phi_alt(nu, model)
        if abs(other - pair.value) > 1e-8 * max(pair.value, 1e-300):
            raise SolverInvariantError("phi differs between H and M[nu]^-1 M' forms",
                                       value=pair.value, swapped=other)
    return pair.value, pair.vector


def phi_gradient(nu, model: ResponseModel) -> np.ndarray:
    """d phi / d nu_i = -(M'z)_i^2 / nu_i^2 with z the unit dominant eigenvector of M[nu]^{-1}M'"""
    nu = _as_array(nu)
    _, omega = phi(nu, model)
    Mz = _dual_loads(nu, omega, model)
    return -(Mz ** 2) / nu ** 2


def _dual_loads(nu: np.ndarray, omega: np.ndarray, model: ResponseModel) -> np.ndarray:
    """M'z, recovering z = M [nu]^{-1/2} omega / ||.|| from the source-side eigenvector"""
    z = model.M @ (omega / np.sqrt(nu))
    norm = np.linalg.norm(z)
    if norm == 0:
        return np.zeros_like(nu)
    z = z / norm
    if z.sum() < 0:
        z = -z
    return model.M.T @ z


# ---------------------------------------------------------------------------
# High-budget regime
# ---------------------------------------------------------------------------

def unconstrained_solution(c: float, model: ResponseModel) -> ProtectionVector:
    """nu0(c) = c*pi, with phi(c*pi) = 1'H1 / c"""
    if not c > 0:
        raise NonPositiveBudget("budget must be positive", c=c)
    nu = ProtectionVector(nu=c * model.pi, c=c)
    if model.irreducible:
        value, _ = phi(nu, model)
        expected = model.total_mass / c
        if abs(value - expected) > 1e-9 * expected:
            raise SolverInvariantError("phi(c*pi) != 1'H1/c", value=value, expected=expected)
    return nu


def _check_bounds(d, model: ResponseModel) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape != (model.m,):
        raise ConfigError("lower-bound vector has wrong length", expected=model.m, got=d.shape)
    if np.any(d <= 0):
        raise ConfigError("lower bounds must be strictly positive")
    return d


def high_budget_threshold(d, model: ResponseModel) -> float:
    """c0 = max_i d_i / pi_i"""
    d = _check_bounds(d, model)
    if np.any(model.pi <= 0):
        raise NotIrreducible(model.components)
    return float(np.max(d / model.pi))


# ---------------------------------------------------------------------------
# Restricted problem: sources in W pinned at d, sources in U free
# ---------------------------------------------------------------------------

class RestrictedSolver:
    """
    Minimizer of phi over {nu_W = d_W, 1'nu_U <= c - 1'd_W}.

    K = M_W [d_W]^{-1} M_W' is diagonalized once; each budget then costs one
    scalar bisection on g(rho) = sum_j b_j^2 / (rho - Lambda_j) = c - 1'd_W.
    """

    def __init__(self, active: Sequence[int], d: np.ndarray, M: np.ndarray):
        settings = get_settings()
        m = M.shape[1]
        self.active = np.array(sorted(int(i) for i in active), dtype=int)
        if self.active.size == 0:
            raise EmptyActiveSet("restricted problem needs at least one free source")
        mask = np.zeros(m, dtype=bool)
        mask[self.active] = True
        self.saturated = np.flatnonzero(~mask)
        if self.saturated.size == 0:
            raise ConfigError("no saturated sources; use unconstrained_solution")
        self.d = np.asarray(d, dtype=float)
        self.M_U = M[:, self.active]
        M_W = M[:, self.saturated]
        d_W = self.d[self.saturated]
        K = (M_W / d_W) @ M_W.T
        self.eigenvalues, self.eigenvectors = full_symmetric_eigendecomposition(0.5 * (K + K.T))
        self.rho_K = float(max(self.eigenvalues[0], 0.0))
        self.b = self.eigenvectors.T @ self.M_U.sum(axis=1)
        self.pinned_mass = float(d_W.sum())
        self.rtol = settings.secular_rtol

    def secular(self, rho: float) -> float:
        return float(np.sum(self.b ** 2 / (rho - self.eigenvalues)))

    def _solve_rho(self, target: float) -> float:
        lower = self.rho_K * (1.0 + 1e-12) + 1e-300
        if self.secular(lower) < target:
            raise BracketFailure("secular equation not bracketed from below",
                                 rho_K=self.rho_K, target=target)
        upper = self.rho_K + 1.0
        for _ in range(2000):
            if self.secular(upper) < target:
                break
            upper = self.rho_K + 2.0 * (upper - self.rho_K)
        else:
            raise BracketFailure("secular equation not bracketed from above", target=target)
        return optimize.bisect(lambda r: self.secular(r) - target, lower, upper,
                               xtol=1e-300, rtol=self.rtol, maxiter=1000)

    def solve(self, c: float) -> Tuple[np.ndarray, float]:
        """Full-length nu^U(c) and the regime value rho = phi(nu^U(c))"""
        target = c - self.pinned_mass
        if not target > 0:
            raise BudgetTooSmall("budget does not exceed the pinned mass", c=c, pinned=self.pinned_mass)
        rho = self._solve_rho(target)
        weights = self.b / (rho - self.eigenvalues)
        nu = self.d.copy()
        nu[self.active] = self.M_U.T @ (self.eigenvectors @ weights)
        spent = float(nu[self.active].sum())
        if abs(spent - target) > 1e-8 * max(1.0, c):
            raise SolverInvariantError("restricted solution misses the budget", spent=spent, target=target)
        return nu, rho


def restricted_solution(active: Sequence[int], d, c: float,
                        M: Union[np.ndarray, ResponseModel]) -> Tuple[np.ndarray, float]:
    """nu^U(c) and phi(nu^U(c)); U = all sources falls back to c*pi"""
    model = M if isinstance(M, ResponseModel) else compute_H_and_centrality(M)
    _require_irreducible(model)
    d = _check_bounds(d, model)
    if len(active) == 0:
        raise EmptyActiveSet("restricted problem needs at least one free source")
    if len(set(int(i) for i in active)) == model.m:
        nu = unconstrained_solution(c, model).nu
        return nu.copy(), model.total_mass / c
    solver = RestrictedSolver(active, d, model.M)
    nu, rho = solver.solve(c)
    value, _ = phi(nu, model)
    if abs(value - rho) > 1e-8 * value:
        raise SolverInvariantError("secular rho differs from phi", rho=rho, phi=value)
    return nu, rho


# ---------------------------------------------------------------------------
# Waterfilling recursion
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class _Regime:
    upper: float
    active: np.ndarray
    solver: RestrictedSolver
    lower: Optional[float] = None


@dataclass(eq=False)
class Waterfiller:
    """Lazily peels regimes c0 > c1 > ...; shared by waterfill and schedule"""
    model: ResponseModel
    d: np.ndarray
    regimes: List[_Regime] = field(default_factory=list)

    def __post_init__(self):
        _require_irreducible(self.model)
        self.d = _check_bounds(self.d, self.model)
        settings = get_settings()
        self.floor = float(self.d.sum())
        self.c0 = high_budget_threshold(self.d, self.model)
        self.tol_sat = settings.sat_rel_tol * float(self.d.max())
        self.breakpoint_rtol = settings.breakpoint_rtol
        self.exhausted = False
        initial = np.flatnonzero(self.c0 * self.model.pi - self.d > self.tol_sat)
        if initial.size == 0 or self.c0 <= self.floor:
            self.exhausted = True
        else:
            self.regimes.append(self._open_regime(self.c0, initial))

    def _open_regime(self, upper: float, active: np.ndarray) -> _Regime:
        # components that are already (numerically) at d when the regime opens stay pinned
        while True:
            solver = RestrictedSolver(active, self.d, self.model.M)
            nu, _ = solver.solve(upper)
            slack = nu[active] - self.d[active]
            keep = active[slack > self.tol_sat]
            if keep.size == active.size or keep.size == 0:
                return _Regime(upper=upper, active=active, solver=solver)
            active = keep

    def _gap(self, regime: _Regime, c: float) -> float:
        nu, _ = regime.solver.solve(c)
        return float(np.min(nu[regime.active] - self.d[regime.active]))

    def _close(self, regime: _Regime) -> Optional[_Regime]:
        """Find the next breakpoint below regime.upper and open the following regime"""
        lo, hi = self.floor, regime.upper
        if self._gap(regime, lo) >= -self.tol_sat:
            regime.lower = self.floor
            return None
        root = optimize.bisect(lambda c: self._gap(regime, c), lo, hi,
                               xtol=1e-300, rtol=self.breakpoint_rtol, maxiter=1000)
        if root <= self.floor * (1.0 + self.breakpoint_rtol):
            regime.lower = self.floor
            return None
        nu, _ = regime.solver.solve(root)
        slack = nu[regime.active] - self.d[regime.active]
        remaining = regime.active[(slack > self.tol_sat) & (np.arange(slack.size) != int(np.argmin(slack)))]
        if remaining.size == 0:
            # everything left saturates together, which only happens at 1'd
            regime.lower = self.floor
            return None
        regime.lower = root
        logger.debug(f"Breakpoint c={root:.12g}: {regime.active.size - remaining.size} sources saturate")
        return self._open_regime(root, remaining)

    def advance(self) -> bool:
        """Close the last open regime; False once the schedule reaches 1'd"""
        if self.exhausted:
            return False
        following = self._close(self.regimes[-1])
        if following is None:
            self.exhausted = True
            return False
        if following.upper >= self.regimes[-1].upper:
            raise SolverInvariantError("breakpoints failed to decrease", upper=following.upper)
        self.regimes.append(following)
        return True

    def locate(self, c: float) -> Tuple[np.ndarray, int]:
        """nu*(c) and its regime index, peeling only as many regimes as needed"""
        if c >= self.c0:
            return c * self.model.pi, -1
        k = 0
        while True:
            if k >= len(self.regimes):
                return self.d.copy(), len(self.regimes) - 1
            regime = self.regimes[k]
            if regime.lower is None:
                self.advance()
            if c > regime.lower:
                nu, _ = regime.solver.solve(c)
                return nu, k
            k += 1

    def to_schedule(self) -> BudgetSchedule:
        while self.advance():
            pass
        breakpoints = [self.c0] + [r.lower for r in self.regimes]
        active_sets = [list(range(self.model.m))] + [r.active.tolist() for r in self.regimes]
        solvers: List[Optional[RestrictedSolver]] = [None] + [r.solver for r in self.regimes]
        if len(breakpoints) > 1:
            breakpoints[-1] = self.floor
        return BudgetSchedule(breakpoints=breakpoints, active_sets=active_sets, solvers=solvers,
                              d=self.d.copy(), pi=np.array(self.model.pi))


def kkt_residual(nu: np.ndarray, omega: np.ndarray, d: np.ndarray, model: ResponseModel,
                 tol_sat: float) -> float:
    """
    Relative spread of q_i = (M'z)_i^2 / nu_i^2 over active sources, combined with
    any saturated q_i exceeding the largest active q.
    """
    q = _dual_loads(nu, omega, model) ** 2 / nu ** 2
    active = nu - d > tol_sat
    if not np.any(active):
        return 0.0
    qa = q[active]
    mean = float(qa.mean())
    if mean <= 0:
        return float("inf")
    spread = float(qa.max() - qa.min()) / mean
    excess = float(np.max(q[~active] - qa.max(), initial=0.0)) / mean
    return max(spread, max(excess, 0.0))


def build_report(nu: np.ndarray, c: float, d: np.ndarray, model: ResponseModel,
                 regime_index: int, tol_sat: Optional[float] = None) -> SolveReport:
    """Evaluate phi at nu and package the audit fields"""
    if tol_sat is None:
        tol_sat = get_settings().sat_rel_tol * float(np.max(d))
    value, omega = phi(nu, model)
    if omega.sum() < 0:
        omega = -omega
    attained = displacement(nu, omega, model)
    if abs(attained - value) > 1e-9 * value:
        raise SolverInvariantError("attacker response does not attain phi", phi=value, attained=attained)
    return SolveReport(
        nu=np.array(nu),
        c=float(c),
        value=value,
        active_set=np.flatnonzero(nu - d > tol_sat).tolist(),
        attacker_response=omega,
        kkt_residual=kkt_residual(nu, omega, d, model, tol_sat),
        regime_index=regime_index,
    )


def waterfill(d, c: float, model: ResponseModel, waterfiller: Optional[Waterfiller] = None) -> SolveReport:
    """
    Exact nu*(c): c*pi for c >= c0, otherwise the restricted solution of the
    regime containing c, and d itself at c = 1'd.
    """
    _require_irreducible(model)
    d = _check_bounds(d, model)
    floor = float(d.sum())
    if c < floor - _feasibility_tol(floor):
        raise BudgetInfeasible("budget below the sum of lower bounds", c=c, minimum=floor)
    wf = waterfiller if waterfiller is not None else Waterfiller(model=model, d=d)
    if c <= floor:
        nu, regime = d.copy(), len(wf.to_schedule().breakpoints) - 2
    else:
        nu, regime = wf.locate(c)
    return build_report(nu, c, d, model, regime, tol_sat=wf.tol_sat)


def schedule(d, model: ResponseModel) -> BudgetSchedule:
    """Run the recursion to exhaustion and record every breakpoint and active set"""
    result = Waterfiller(model=model, d=d).to_schedule()
    logger.info(f"Budget schedule: {len(result.breakpoints)} breakpoints, c0={result.breakpoints[0]:.6g}, "
                f"1'd={float(np.sum(d)):.6g}")
    return result


def zero_floor_solution(model: ResponseModel, c: Optional[float] = None,
                        epsilon: Optional[float] = None) -> SolveReport:
    """
    Problem with nu > 0 and 1'nu = c (default c = m), emulated with d = epsilon*1;
    the optimum is c*pi whenever epsilon / min(pi) <= c.
    """
    eps = get_settings().zero_floor_epsilon if epsilon is None else epsilon
    budget = float(model.m) if c is None else float(c)
    return waterfill(np.full(model.m, eps), budget, model)


# ---------------------------------------------------------------------------
# Degree heuristics
# ---------------------------------------------------------------------------

def _surplus(c: float, d: np.ndarray) -> float:
    floor = float(d.sum())
    if c < floor - _feasibility_tol(floor):
        raise BudgetInfeasible("budget below the sum of lower bounds", c=c, minimum=floor)
    return max(c - floor, 0.0)


def _heuristic_inputs(g: UndirectedGraph, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape != (g.n,):
        raise ConfigError("lower-bound vector must have one entry per node", n=g.n, got=d.shape)
    if np.any(d <= 0):
        raise ConfigError("lower bounds must be strictly positive")
    return d


def heuristic_degree(c: float, g: UndirectedGraph, d) -> ProtectionVector:
    """nu_i = d_i + (c - 1'd) w_i / sum_j w_j"""
    d = _heuristic_inputs(g, d)
    w = g.degrees
    nu = d + _surplus(c, d) * w / w.sum()
    return ProtectionVector(nu=nu, c=c, d=d)


def heuristic_key_node(c: float, g: UndirectedGraph, d) -> ProtectionVector:
    """The whole surplus goes to the highest-degree node (lowest index on ties)"""
    d = _heuristic_inputs(g, d)
    nu = d.copy()
    nu[int(np.argmax(g.degrees))] += _surplus(c, d)
    return ProtectionVector(nu=nu, c=c, d=d)
