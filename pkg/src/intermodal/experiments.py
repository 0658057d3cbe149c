"""Parameter sweeps over the planning model and their report tables.

Every sweep cell is solved independently; a failing cell is recorded in its
row and the sweep moves on. Money columns are rendered in thousands; emission
caps are reported in the same units as the instance (tons).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import PlannerError
from .instance import Instance
from .model import Plan, RiskParams, max_possible_emissions
from .pipeline import map_ordered, solve_instance
from .risk import REPORT_SCALE, cvar_primal
from .scenarios import ScenarioSet, with_uniform_capacity
from .solver import SolverConfig

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tuple(round(0.1 * k, 1) for k in range(11))
DEFAULT_ALPHAS = (0.25, 0.5, 0.75, 0.9)
DEFAULT_EPSILONS = tuple(float(e) for e in range(25, 376, 25))
DEFAULT_CAPACITIES = tuple(range(4, 11))
EMISSION_LAMBDAS = (0.25, 0.5, 0.75, 0.9)
EMISSION_ALPHAS = (0.25, 0.5, 0.7, 0.95)


@dataclass
class SweepSpec:
    kind: str  # risk-grid | emissions-grid | capacity-grid | stochastic-values | breakdown
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    capacities: tuple[int, ...] = DEFAULT_CAPACITIES
    epsilon: float | None = None  # fixed cap override for non-emission sweeps
    use_transfer: bool = False
    linking: bool = True
    workers: int = 1

    KINDS = ("risk-grid", "emissions-grid", "capacity-grid", "stochastic-values", "breakdown")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise PlannerError("BAD_SWEEP", f"unknown sweep kind {self.kind!r}")
        for name in ("lambdas", "alphas", "epsilons", "capacities"):
            if not getattr(self, name):
                raise PlannerError("BAD_SWEEP", f"{name} grid is empty")
        for lam in self.lambdas:
            RiskParams(lam, 0.5)
        for a in self.alphas:
            RiskParams(0.0, a)
        if any(e < 0 for e in self.epsilons):
            raise PlannerError("BAD_SWEEP", "emission caps must be >= 0")
        if any(k < 0 for k in self.capacities):
            raise PlannerError("BAD_SWEEP", "capacities must be >= 0")

    @classmethod
    def emissions(cls, **kw) -> "SweepSpec":
        kw.setdefault("lambdas", EMISSION_LAMBDAS)
        kw.setdefault("alphas", EMISSION_ALPHAS)
        return cls("emissions-grid", **kw)


@dataclass
class ReportTable:
    """Rows of raw values plus the rules for rendering them as CSV."""

    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    money: frozenset[str] = frozenset()
    diagnostics: list[dict[str, Any]] = field(default_factory=list)

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]

    def where(self, **match) -> list[dict[str, Any]]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]

    def _cell(self, name: str, value) -> str:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return ""
        if name in self.money:
            return f"{value * REPORT_SCALE:.4f}"
        if isinstance(value, float):
            return f"{value:.10g}"
        return str(value)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for r in self.rows:
                writer.writerow([self._cell(c, r.get(c)) for c in self.columns])

    def write_sidecar(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.diagnostics, indent=2, default=float) + "\n", encoding="utf-8")

    @property
    def failures(self) -> list[dict[str, Any]]:
        return [r for r in self.rows if r.get("status") != "optimal"]


def _diag(cell: dict, out) -> dict:
    r = out.result
    return {**cell, "status": r.status, "objective": r.objective, "bound": r.bound, "gap": r.gap,
            "nodes": r.nodes, "lp_iterations": r.lp_iterations, "wall_time": r.wall_time}


def _failed(cell: dict, exc: Exception) -> tuple[dict, dict]:
    msg = f"{type(exc).__name__}: {exc}"
    log.warning("sweep cell %s failed: %s", cell, msg)
    return {**cell, "status": "error", "error": msg}, {**cell, "status": "error", "error": msg}


# ---------------------------------------------------------------- risk grid


def plan_risk_columns(plan: Plan, alpha: float) -> dict[str, float]:
    """ASC, E(TC), VaR and CVaR of a solved plan.

    VaR and CVaR are evaluated on the per-scenario second-stage costs of the
    plan (the quantity the CVaR rows of the model constrain), which keeps them
    well defined even when the risk weight is zero and theta is free.
    """
    probs = plan.probabilities
    second = plan.scenario_costs
    asc = float(probs @ second)
    etc = plan.breakdown.first_stage + asc + float(probs @ plan.breakdown.emissions_penalty)
    tail = cvar_primal(second, probs, alpha)
    return {"ASC": asc, "E(TC)": etc, "VaR": tail.var, "CVaR": tail.cvar}


def _risk_cell(job):
    inst, scen, cfg, spec, lam, alpha, eps = job
    cell = {"lambda": lam, "alpha": alpha}
    if eps is not None:
        cell["epsilon"] = eps
    try:
        out = solve_instance(inst, scen, RiskParams(lam, alpha), cfg, epsilon=eps, use_transfer=spec.use_transfer,
                             linking=spec.linking)
    except Exception as exc:  # recorded in-row, the sweep goes on
        return _failed(cell, exc)
    row = {**cell, "status": out.status, "OBJ": out.objective if out.plan else math.nan}
    if out.plan is not None:
        row.update(plan_risk_columns(out.plan, alpha))
        row["excess_emissions"] = float(out.plan.probabilities @ out.plan.excess_emissions)
        row["max_emissions"] = max_possible_emissions(out.model)
    return row, _diag(cell, out)


RISK_COLUMNS = ("alpha", "lambda", "OBJ", "ASC", "E(TC)", "VaR", "CVaR", "status")


def run_risk_grid(inst: Instance, scen: ScenarioSet, spec: SweepSpec | None = None,
                  cfg: SolverConfig | None = None) -> ReportTable:
    spec = spec or SweepSpec("risk-grid")
    cfg = cfg or SolverConfig()
    jobs = [(inst, scen, cfg, spec, lam, a, spec.epsilon) for a in spec.alphas for lam in spec.lambdas]
    results = map_ordered(_risk_cell, jobs, spec.workers)
    return ReportTable(RISK_COLUMNS + ("error",), [r for r, _ in results],
                       money=frozenset({"OBJ", "ASC", "E(TC)", "VaR", "CVaR"}),
                       diagnostics=[d for _, d in results])


# ---------------------------------------------------------------- emissions grid


EMISSION_COLUMNS = ("epsilon", "lambda", "alpha", "OBJ", "plateau", "above_max_emissions", "status")


def run_emissions_grid(inst: Instance, scen: ScenarioSet, spec: SweepSpec | None = None,
                       cfg: SolverConfig | None = None) -> ReportTable:
    spec = spec or SweepSpec.emissions()
    cfg = cfg or SolverConfig()
    jobs = [(inst, scen, cfg, spec, lam, a, float(e)) for lam in spec.lambdas for a in spec.alphas
            for e in spec.epsilons]
    results = map_ordered(_risk_cell, jobs, spec.workers)
    rows = [r for r, _ in results]
    rel = 2.0 * cfg.gap
    for lam in spec.lambdas:
        for a in spec.alphas:
            series = [r for r in rows if r["lambda"] == lam and r["alpha"] == a]
            prev = None
            for r in series:
                obj = r.get("OBJ", math.nan)
                r["plateau"] = bool(prev is not None and not math.isnan(obj) and not math.isnan(prev)
                                    and abs(obj - prev) <= rel * max(1.0, abs(prev)))
                cap = r.get("max_emissions")
                r["above_max_emissions"] = bool(cap is not None and r["epsilon"] >= cap)
                prev = obj
    return ReportTable(EMISSION_COLUMNS + ("error",), rows, money=frozenset({"OBJ"}),
                       diagnostics=[d for _, d in results])


# ---------------------------------------------------------------- capacity grid


CAPACITY_COLUMNS = ("capacity", "total_cost", "unmet", "pct_met", "max_unmet", "min_unmet", "std_unmet", "status")


def unmet_statistics(plan: Plan) -> dict[str, float]:
    """Unmet demand over (train, scenario) pairs; the spread uses the population std."""
    values = np.array([u for per in plan.unmet for u in per.values()], dtype=float)
    if not values.size:
        return {"unmet": 0.0, "max_unmet": 0.0, "min_unmet": 0.0, "std_unmet": 0.0}
    return {"unmet": float(values.sum()), "max_unmet": float(values.max()), "min_unmet": float(values.min()),
            "std_unmet": float(values.std())}


def _capacity_cell(job):
    inst, scen, cfg, spec, k = job
    cell = {"capacity": k}
    try:
        out = solve_instance(inst, with_uniform_capacity(scen, k), RiskParams(0.0, 0.5), cfg, epsilon=spec.epsilon,
                             use_transfer=spec.use_transfer, linking=spec.linking)
    except Exception as exc:
        return _failed(cell, exc)
    row = {**cell, "status": out.status}
    if out.plan is not None:
        total_demand = float(sum(d for s in scen for d in s.demand.values()))
        stats = unmet_statistics(out.plan)
        row.update(stats)
        row["total_cost"] = out.objective
        row["pct_met"] = 100.0 * (1.0 - stats["unmet"] / total_demand) if total_demand else 100.0
    return row, _diag(cell, out)


def run_capacity_grid(inst: Instance, scen: ScenarioSet, spec: SweepSpec | None = None,
                      cfg: SolverConfig | None = None) -> ReportTable:
    spec = spec or SweepSpec("capacity-grid")
    cfg = cfg or SolverConfig()
    results = map_ordered(_capacity_cell, [(inst, scen, cfg, spec, k) for k in spec.capacities], spec.workers)
    return ReportTable(CAPACITY_COLUMNS + ("error",), [r for r, _ in results], money=frozenset({"total_cost"}),
                       diagnostics=[d for _, d in results])


def shrinking_after_knee(costs: Sequence[float], tol: float = 1e-9) -> tuple[bool, int]:
    """Whether successive cost drops shrink monotonically after the largest drop.

    Returns (holds, knee index into the drop sequence).
    """
    drops = [costs[k] - costs[k + 1] for k in range(len(costs) - 1)]
    if not drops:
        return True, 0
    knee = int(np.argmax(drops))
    tail = drops[knee:]
    scale = max(1.0, max(abs(c) for c in costs))
    return all(tail[k + 1] <= tail[k] + tol * scale for k in range(len(tail) - 1)), knee


# ---------------------------------------------------------------- breakdown


@dataclass
class BreakdownReport:
    supply: float
    transport: float
    unmet_penalty: float
    emissions_penalty: float
    zero_total: bool = False

    COMPONENTS = ("supply", "transport", "unmet_penalty", "emissions_penalty")

    @property
    def amounts(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.COMPONENTS}

    @property
    def total(self) -> float:
        return float(sum(self.amounts.values()))

    @property
    def shares(self) -> dict[str, float]:
        total = self.total
        if self.zero_total or total <= 0:
            return {k: 0.0 for k in self.COMPONENTS}
        return {k: 100.0 * v / total for k, v in self.amounts.items()}

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("component", "amount", "share_pct"))
            shares = self.shares
            for k, v in self.amounts.items():
                writer.writerow((k, f"{v * REPORT_SCALE:.4f}", f"{shares[k]:.2f}"))
            writer.writerow(("zero_total", str(self.zero_total).lower(), ""))


def cost_breakdown(plan: Plan) -> BreakdownReport:
    """Probability-weighted cost components of a solved plan."""
    p = plan.probabilities
    b = plan.breakdown
    parts = dict(supply=b.first_stage, transport=float(p @ b.transport), unmet_penalty=float(p @ b.unmet_penalty),
                 emissions_penalty=float(p @ b.emissions_penalty))
    total = sum(parts.values())
    return BreakdownReport(**parts, zero_total=abs(total) <= 1e-12)


# ---------------------------------------------------------------- monotonicity checks


def non_decreasing(values: Sequence[float], rel_tol: float) -> bool:
    return all(b >= a - rel_tol * max(1.0, abs(a)) for a, b in zip(values, values[1:]))


def non_increasing(values: Sequence[float], rel_tol: float) -> bool:
    return all(b <= a + rel_tol * max(1.0, abs(a)) for a, b in zip(values, values[1:]))
