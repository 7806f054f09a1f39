"""
Analysis service behind the command-line subcommands
"""
from concurrent.futures import ThreadPoolExecutor
import logging
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..config import get_settings
from ..errors import BudgetInfeasible, ConfigError
from ..network.builders import build_friedkin_johnsen, sum_irreducible
from ..network.generators import (
    ErdosRenyiGenerator,
    PreferentialAttachmentGenerator,
    RegularGenerator,
    generate_graph,
)
from ..network.loaders import load_system
from ..network.models import InfluenceSystem, StubbornnessProfile, UndirectedGraph
from .reporting import Table, human, nu_columns
from .solver import (
    BudgetSchedule,
    build_report,
    heuristic_degree,
    heuristic_key_node,
    high_budget_threshold,
    phi,
    schedule,
    waterfill,
)
from .spectral import ResponseModel, analyze

logger = logging.getLogger(__name__)

VectorSpec = Union[float, List[float]]


class SweepSpec(BaseModel):
    start: float
    stop: float
    steps: int

    @model_validator(mode="after")
    def _ordered(self):
        if not self.start < self.stop:
            raise ValueError("sweep needs from < to")
        if self.steps < 2:
            raise ValueError("sweep needs at least 2 steps")
        return self

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected from:to:steps, got '{text}'")
        return cls(start=float(parts[0]), stop=float(parts[1]), steps=int(parts[2]))

    def budgets(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


class RunConfig(BaseModel):
    """One CLI invocation: where the network comes from and what to compute"""
    input: Optional[str] = None
    input_format: Optional[Literal["edge_list", "matrix_json"]] = None
    generate: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=2)
    seed: int = 0
    lam: VectorSpec = 0.5
    d: VectorSpec = 1.0
    budget: Optional[float] = None
    sweep: Optional[SweepSpec] = None
    format: Literal["csv", "json"] = "csv"
    heuristics: bool = False
    out: Optional[str] = None
    workers: int = Field(default_factory=lambda: get_settings().sweep_workers, ge=1)
    regular_degree: int = Field(default=4, ge=1)
    er_probability: float = Field(default=0.25, gt=0.0, le=1.0)

    @field_validator("lam")
    @classmethod
    def _lambda_range(cls, v):
        values = [v] if isinstance(v, (int, float)) else v
        if any(x < 0 or x > 1 for x in values):
            raise ValueError("lambda entries must lie in [0, 1]")
        return v

    @field_validator("d")
    @classmethod
    def _positive_floor(cls, v):
        values = [v] if isinstance(v, (int, float)) else v
        if not values or any(x <= 0 for x in values):
            raise ValueError("lower bounds d must be strictly positive")
        return v

    @model_validator(mode="after")
    def _one_source(self):
        if (self.input is None) == (self.generate is None):
            raise ValueError("give exactly one of --input or --generate")
        if self.generate is not None and self.n is None and not self.generate.startswith("tree:"):
            raise ValueError("--generate needs --n")
        if self.budget is not None and self.sweep is not None:
            raise ValueError("give either --budget or --sweep, not both")
        return self

    def resolved_format(self) -> str:
        if self.input_format:
            return self.input_format
        return "matrix_json" if str(self.input).lower().endswith(".json") else "edge_list"


def _expand(spec: VectorSpec, size: int, name: str) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.full(size, float(spec))
    arr = np.asarray(spec, dtype=float)
    if arr.shape != (size,):
        raise ConfigError(f"{name} vector has {arr.size} entries, expected {size}")
    return arr


class AnalysisService:
    """Resolves the configured network once and runs the requested analyses on it"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.graph: Optional[UndirectedGraph] = None
        self.system: InfluenceSystem = self._resolve_system()
        self.model: ResponseModel = analyze(self.system)
        self.d = _expand(config.d, self.system.m, "d")

    def _resolve_system(self) -> InfluenceSystem:
        cfg = self.config
        if cfg.input is not None:
            loaded = load_system(Path(cfg.input), format=cfg.resolved_format())
            if isinstance(loaded, InfluenceSystem):
                self.graph = loaded.graph
                return loaded
            graph = loaded
        else:
            n = cfg.n if cfg.n is not None else len(cfg.generate.split(":", 1)[1].split(","))
            graph = generate_graph(cfg.generate, n, cfg.seed)
        self.graph = graph
        return build_friedkin_johnsen(graph, StubbornnessProfile(_expand(cfg.lam, graph.n, "lambda")))

    @property
    def floor(self) -> float:
        return float(self.d.sum())

    def _check_budget(self, c: float) -> None:
        if c < self.floor - 1e-12 * max(1.0, self.floor):
            raise BudgetInfeasible("budget below the sum of lower bounds", c=c, minimum=self.floor)

    def _budgets(self) -> np.ndarray:
        sweep = self.config.sweep or SweepSpec(start=self.floor, stop=2.0 * self.floor, steps=21)
        budgets = sweep.budgets()
        for c in budgets:
            self._check_budget(float(c))
        return budgets

    # -- centrality --------------------------------------------------------

    def centrality(self) -> Table:
        columns = ["index", "label", "pi"] + (["degree"] if self.graph is not None else [])
        # system-wide values repeat on every row so CSV output carries them too
        columns += ["total_mass", "c0", "irreducible", "sum_irreducible"]
        table = Table(command="centrality", columns=columns)
        degrees = self.graph.degrees if self.graph is not None else None
        c0 = high_budget_threshold(self.d, self.model) if np.all(self.model.pi > 0) else None
        weakly_connected = sum_irreducible(self.system)
        for i in range(self.model.m):
            row = dict(index=i + 1, label=self.system.source_labels[i], pi=self.model.pi[i],
                       total_mass=self.model.total_mass, c0=c0, irreducible=self.model.irreducible,
                       sum_irreducible=weakly_connected)
            if degrees is not None:
                row["degree"] = degrees[i] if i < degrees.size else None
            table.add(**row)
        table.meta.update(
            n=self.system.n,
            m=self.system.m,
            total_mass=self.model.total_mass,
            c0=c0,
            sum_d=self.floor,
            irreducible=self.model.irreducible,
            sum_irreducible=weakly_connected,
            components=[[i + 1 for i in comp] for comp in self.model.components],
        )
        return table

    # -- solve -------------------------------------------------------------

    def solve(self) -> Table:
        c = self.config.budget
        if c is None:
            raise ConfigError("solve needs --budget")
        self._check_budget(c)
        report = waterfill(self.d, c, self.model)
        logger.info(f"c={human(c)}: phi={human(report.value)}, regime={report.regime_index}, "
                    f"active={len(report.active_set)}/{self.model.m}, kkt={report.kkt_residual:.2e}")
        columns = ["c", "phi", "regime", "kkt_residual", "active_count", "active_set"] + nu_columns(self.model.m)
        table = Table(command="solve", columns=columns)
        row = dict(c=c, phi=report.value, regime=report.regime_index, kkt_residual=report.kkt_residual,
                   active_count=len(report.active_set), active_set=[i + 1 for i in report.active_set])
        row.update(zip(nu_columns(self.model.m), report.nu))
        table.add(**row)
        table.meta.update(
            d=self.d,
            attacker_response=report.attacker_response,
            c0=high_budget_threshold(self.d, self.model),
            total_mass=self.model.total_mass,
        )
        return table

    # -- sweep -------------------------------------------------------------

    def _sweep_row(self, c: float, plan: BudgetSchedule) -> dict:
        nu = plan.evaluate(c)
        regime = plan.regime_of(c)
        report = build_report(nu, c, self.d, self.model, regime)
        row = dict(c=c, phi=report.value, regime=regime,
                   regime_upper=plan.breakpoints[regime] if regime >= 0 else None,
                   regime_lower=plan.breakpoints[regime + 1] if regime >= 0 else plan.high_budget_threshold,
                   c0=plan.high_budget_threshold)
        row.update(zip(nu_columns(self.model.m), nu))
        if self.config.heuristics and self.graph is not None:
            row["ratio_degree"] = phi(heuristic_degree(c, self.graph, self.d), self.model)[0] / report.value
            row["ratio_key"] = phi(heuristic_key_node(c, self.graph, self.d), self.model)[0] / report.value
        return row

    def sweep(self) -> Table:
        budgets = self._budgets()
        plan = schedule(self.d, self.model)
        columns = ["c", "phi", "regime", "regime_upper", "regime_lower", "c0"] + nu_columns(self.model.m)
        if self.config.heuristics:
            if self.graph is None:
                raise ConfigError("--heuristics needs a graph input (degrees are undefined for raw A, B)")
            columns += ["ratio_degree", "ratio_key"]
        table = Table(command="sweep", columns=columns)
        # map() keeps budget order whatever the completion order
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            rows = list(pool.map(lambda c: self._sweep_row(float(c), plan), budgets))
        for row in rows:
            table.add(**row)
        logger.info(f"Swept {len(rows)} budgets in [{human(budgets[0])}, {human(budgets[-1])}]")
        table.meta.update(breakpoints=plan.breakpoints, c0=plan.high_budget_threshold,
                          total_mass=self.model.total_mass, d=self.d)
        return table

    # -- schedule ----------------------------------------------------------

    def schedule(self) -> Table:
        plan = schedule(self.d, self.model)
        table = Table(command="schedule", columns=["k", "breakpoint", "active_count", "members"])
        for k, (c, members) in enumerate(zip(plan.breakpoints, plan.active_sets)):
            table.add(k=k, breakpoint=c, active_count=len(members), members=[i + 1 for i in members])
        table.meta.update(c0=plan.high_budget_threshold, sum_d=self.floor, regimes=plan.regime_count)
        return table


def compare_topologies(config: RunConfig) -> Table:
    """
    Regular, Erdos-Renyi and preferential-attachment graphs at the same n and seed,
    with their thresholds c0 and value curves phi(nu*(c)).
    """
    n = config.n
    if n is None:
        raise ConfigError("compare-topologies needs --n")
    generators = [
        ("regular", RegularGenerator(config.regular_degree)),
        ("er", ErdosRenyiGenerator(config.er_probability)),
        ("ba", PreferentialAttachmentGenerator()),
    ]
    sweep = config.sweep or SweepSpec(start=float(n), stop=2.0 * n, steps=21)
    budgets = sweep.budgets()
    columns = ["topology", "c", "phi", "c0", "total_mass", "c0_ba_exceeds_er", "phi_ba_exceeds_er_low_budget"]
    table = Table(command="compare-topologies", columns=columns)
    thresholds, curves, masses = {}, {}, {}
    for name, generator in generators:
        graph = generate_graph(generator, n, config.seed)
        system = build_friedkin_johnsen(graph, StubbornnessProfile(_expand(config.lam, n, "lambda")))
        model = analyze(system)
        d = _expand(config.d, n, "d")
        if budgets[0] < d.sum() - 1e-12 * d.sum():
            raise BudgetInfeasible("sweep starts below the sum of lower bounds", c=float(budgets[0]))
        plan = schedule(d, model)
        values = [phi(plan.evaluate(float(c)), model)[0] for c in budgets]
        thresholds[name] = plan.high_budget_threshold
        curves[name] = values
        masses[name] = model.total_mass
        logger.info(f"{name}: c0={human(plan.high_budget_threshold)}, 1'H1={human(model.total_mass)}")

    low = [j for j, c in enumerate(budgets) if c < min(thresholds["er"], thresholds["ba"])]
    c0_flag = thresholds["ba"] > thresholds["er"]
    phi_flag = all(curves["ba"][j] > curves["er"][j] for j in low) if low else None
    for name, _ in generators:
        for c, value in zip(budgets, curves[name]):
            table.add(topology=name, c=c, phi=value, c0=thresholds[name], total_mass=masses[name],
                      c0_ba_exceeds_er=c0_flag, phi_ba_exceeds_er_low_budget=phi_flag)
    table.meta.update(
        n=n,
        seed=config.seed,
        c0=thresholds,
        c0_ba_exceeds_er=c0_flag,
        phi_ba_exceeds_er_low_budget=phi_flag,
        low_budget_points=len(low),
    )
    return table

