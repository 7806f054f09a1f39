"""
Batch acceptance harness for the waterfilling solver.

Runs the seeded Erdos-Renyi Friedkin-Johnsen corpus and reports:
- high-budget law (nu = c*pi, phi = 1'H1/c above c0)
- agreement with the projected-gradient oracle below c0
- regime structure and schedule-lookup consistency
- monotonicity / continuity of nu*(c) along a budget grid
- attacker optimality and random-attack bound
- dominance over the degree heuristics
- BA vs ER threshold comparison (reported, not asserted)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import sys

import numpy as np

# Ensure "opinion_defense" package is importable when running as a script
ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from opinion_defense.network.builders import build_friedkin_johnsen
from opinion_defense.network.generators import ErdosRenyiGenerator, PreferentialAttachmentGenerator, generate_graph
from opinion_defense.network.models import StubbornnessProfile
from opinion_defense.services.dynamics import displacement
from opinion_defense.services.oracle import attack_sample, projected_gradient_minimize
from opinion_defense.services.solver import (
    Waterfiller,
    heuristic_degree,
    heuristic_key_node,
    high_budget_threshold,
    phi,
    schedule,
    waterfill,
)
from opinion_defense.services.spectral import analyze


CASES_PATH = Path(__file__).parent / "cases.json"


@dataclass
class EvalRow:
    seed: int
    c0: float
    regimes: int
    high_budget_err: float = 0.0
    oracle_value_err: float = 0.0
    oracle_nu_err: float = 0.0
    lookup_err: float = 0.0
    monotone_violation: float = 0.0
    jump_ratio: float = 0.0
    attack_err: float = 0.0
    heuristic_gap: float = 0.0
    failures: List[str] = field(default_factory=list)


def _instance(corpus: Dict[str, Any], seed: int):
    n = int(corpus["n"])
    graph = generate_graph(corpus["model"], n, seed)
    system = build_friedkin_johnsen(graph, StubbornnessProfile.uniform(n, corpus["lambda"]))
    model = analyze(system)
    d = np.full(model.m, float(corpus["d"]))
    return graph, model, d


def _jump_ratio(nus: np.ndarray) -> float:
    """Largest consecutive step relative to the larger of its two neighbouring steps"""
    jumps = np.max(np.abs(np.diff(nus, axis=0)), axis=1)
    worst = 0.0
    for j in range(1, len(jumps) - 1):
        local = max(jumps[j - 1], jumps[j + 1], 1e-12)
        worst = max(worst, jumps[j] / local)
    return worst


def evaluate_instance(seed: int, cases: Dict[str, Any]) -> EvalRow:
    tol = cases["tolerances"]
    graph, model, d = _instance(cases["corpus"], seed)
    floor = float(d.sum())
    plan = schedule(d, model)
    c0 = plan.high_budget_threshold
    row = EvalRow(seed=seed, c0=c0, regimes=plan.regime_count)
    wf = Waterfiller(model=model, d=d)

    # High-budget law
    for factor in cases["high_budget_factors"]:
        c = factor * c0
        report = waterfill(d, c, model, waterfiller=wf)
        err = max(float(np.max(np.abs(report.nu - c * model.pi))),
                  abs(report.value - model.total_mass / c))
        row.high_budget_err = max(row.high_budget_err, err)
    if row.high_budget_err > tol["high_budget"]:
        row.failures.append("high_budget")

    # Oracle agreement below c0
    for fraction in cases["oracle_budget_fractions"]:
        c = floor + fraction * (c0 - floor)
        report = waterfill(d, c, model, waterfiller=wf)
        oracle = projected_gradient_minimize(d, c, model)
        row.oracle_value_err = max(row.oracle_value_err, abs(report.value - oracle.value))
        row.oracle_nu_err = max(row.oracle_nu_err, float(np.max(np.abs(report.nu - oracle.nu))))
    if row.oracle_value_err > tol["oracle_value"] or row.oracle_nu_err > tol["oracle_nu"]:
        row.failures.append("oracle")

    # Regime structure
    b = plan.breakpoints
    decreasing = all(b[k] > b[k + 1] for k in range(len(b) - 1))
    nested = all(set(plan.active_sets[k + 1]) < set(plan.active_sets[k]) for k in range(len(b) - 1))
    ends_at_floor = len(b) == 1 or abs(b[-1] - floor) <= 1e-9
    if not (decreasing and nested and ends_at_floor):
        row.failures.append("regimes")
    for c in np.linspace(floor, 2.0 * c0, cases["lookup_points"]):
        nu, _ = wf.locate(float(c)) if c > floor else (d, None)
        row.lookup_err = max(row.lookup_err, float(np.max(np.abs(nu - plan.evaluate(float(c))))))
    if row.lookup_err > tol["lookup"]:
        row.failures.append("lookup")

    # Monotonicity / continuity
    grid = np.linspace(floor, 1.2 * c0, cases["monotonicity_points"])
    nus = np.array([plan.evaluate(float(c)) for c in grid])
    row.monotone_violation = float(max(0.0, -np.min(np.diff(nus, axis=0))))
    row.jump_ratio = _jump_ratio(nus)
    if row.monotone_violation > tol["monotone"] or row.jump_ratio > tol["jump_factor"]:
        row.failures.append("monotone")

    # Attacker optimality and heuristic dominance
    for c in grid[1::20]:
        c = float(c)
        report = waterfill(d, c, model, waterfiller=wf)
        attained = displacement(report.nu, report.attacker_response, model)
        sampled = attack_sample(report.nu, model, trials=cases["attack_trials"], seed=seed)
        row.attack_err = max(row.attack_err, abs(attained - report.value) / report.value,
                             sampled - report.value)
        for heuristic in (heuristic_degree, heuristic_key_node):
            value, _ = phi(heuristic(c, graph, d), model)
            row.heuristic_gap = max(row.heuristic_gap, report.value - value)
    if row.attack_err > tol["attack"]:
        row.failures.append("attack")
    if row.heuristic_gap > tol["heuristic"]:
        row.failures.append("heuristic")
    return row


def topology_fraction(cases: Dict[str, Any]) -> float:
    """Fraction of seeds where the BA threshold exceeds the ER threshold"""
    spec = cases["topology"]
    n = int(spec["n"])
    lam = StubbornnessProfile.uniform(n, cases["corpus"]["lambda"])
    d = np.full(n, float(cases["corpus"]["d"]))
    hits = 0
    for seed in spec["seeds"]:
        c0 = {}
        for name, generator in (("er", ErdosRenyiGenerator(spec["er_probability"])),
                                ("ba", PreferentialAttachmentGenerator())):
            model = analyze(build_friedkin_johnsen(generate_graph(generator, n, seed), lam))
            c0[name] = high_budget_threshold(d, model)
        hits += c0["ba"] > c0["er"]
    return hits / len(spec["seeds"])


def run() -> int:
    cases = json.loads(CASES_PATH.read_text())
    rows: List[EvalRow] = [evaluate_instance(seed, cases) for seed in cases["corpus"]["seeds"]]
    fraction = topology_fraction(cases)

    failed = [r for r in rows if r.failures]
    print("== Eval summary ==")
    print(f"instances: {len(rows)}")
    print(f"avg_regimes: {sum(r.regimes for r in rows) / max(1, len(rows)):.2f}")
    print(f"max_high_budget_err: {max(r.high_budget_err for r in rows):.2e}")
    print(f"max_oracle_value_err: {max(r.oracle_value_err for r in rows):.2e}")
    print(f"max_oracle_nu_err: {max(r.oracle_nu_err for r in rows):.2e}")
    print(f"max_lookup_err: {max(r.lookup_err for r in rows):.2e}")
    print(f"max_jump_ratio: {max(r.jump_ratio for r in rows):.2f}")
    print(f"ba_c0_exceeds_er: {fraction:.0%} of {len(cases['topology']['seeds'])} seeds")
    print(f"passed: {len(rows) - len(failed)}/{len(rows)}")
    print("")

    for r in rows:
        status = "OK" if not r.failures else "FAIL " + ",".join(r.failures)
        print(f"seed={r.seed:02d} | c0={r.c0:8.4f} | regimes={r.regimes:2d} | oracle_nu={r.oracle_nu_err:.1e} | "
              f"lookup={r.lookup_err:.1e} | jump={r.jump_ratio:5.2f} | {status}")

    # Non-zero exit if any hard criterion fails
    if failed:
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
