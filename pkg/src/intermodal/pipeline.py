"""Build, solve, certify and decode in one call, plus an ordered worker pool."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, TypeVar

import numpy as np

from .errors import PlannerError
from .instance import Instance
from .model import MilpModel, Plan, RiskParams, build_milp, decode
from .scenarios import ScenarioSet
from .solver import MipResult, SolverConfig, check_solution, solve_milp

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class SolveOutcome:
    model: MilpModel
    result: MipResult
    plan: Plan | None

    @property
    def status(self) -> str:
        return self.result.status

    @property
    def objective(self) -> float:
        return self.result.objective


def solve_instance(inst: Instance, scen: ScenarioSet, risk: RiskParams | None = None,
                   cfg: SolverConfig | None = None, epsilon: float | None = None, use_transfer: bool = False,
                   linking: bool = True, fix_first_stage: Mapping[str, int] | None = None) -> SolveOutcome:
    """Solve one deterministic-equivalent model.

    ``fix_first_stage`` pins container preparation per origin id (used to
    evaluate a given first-stage plan against the scenario set).
    """
    risk = risk or RiskParams()
    model = build_milp(inst, scen, risk, epsilon_override=epsilon, use_transfer=use_transfer, linking=linking)
    if fix_first_stage is not None:
        lb, ub = model.lb.copy(), model.ub.copy()
        for i, origin in enumerate(inst.origins):
            col = model.layout.y.start + i
            lb[col] = ub[col] = float(fix_first_stage[origin.id])
        model = model.with_bounds(lb, ub)
    result = solve_milp(model, cfg)
    plan = None
    if result.x is not None:
        bad = check_solution(model, result.x)
        if bad:
            raise PlannerError("CERTIFICATE_FAILED", f"incumbent violates {len(bad)} constraint(s): {bad[0]}",
                               violations=[str(v) for v in bad[:10]])
        plan = decode(model, result.x, result.objective)
    return SolveOutcome(model, result, plan)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``[fn(item) for item in items]``, optionally across processes; order is preserved."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def probability_sum(values: Iterable[float], probs: np.ndarray) -> float:
    """Probability-weighted sum in fixed scenario order."""
    total = 0.0
    for v, p in zip(values, probs):
        total += float(p) * float(v)
    return total
