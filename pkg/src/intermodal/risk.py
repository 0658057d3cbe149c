"""CVaR (two independent computations) and the value-of-information metrics."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import PlannerError
from .instance import Instance
from .model import RiskParams
from .pipeline import map_ordered, probability_sum, solve_instance
from .scenarios import ScenarioSet, mean_value_scenario, single
from .solver import SolverConfig

log = logging.getLogger(__name__)

PROB_TOL = 1e-9
REPORT_SCALE = 1e-3  # monetary report columns are in thousands


@dataclass
class CvarResult:
    var: float
    cvar: float
    weights: np.ndarray | None = None  # tail weights q (dual form only)


def _check(costs, probs, alpha) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(costs, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if c.shape != p.shape:
        raise PlannerError("LENGTH_MISMATCH", f"{c.size} costs but {p.size} probabilities")
    if c.size == 0:
        raise PlannerError("EMPTY_SET", "no scenarios")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise PlannerError("BAD_PROBABILITY", f"probabilities must be >= 0 and sum to 1 (sum {p.sum():.12g})")
    if not np.all(np.isfinite(c)):
        raise PlannerError("NON_FINITE", "costs must be finite")
    if alpha >= 1.0:
        raise PlannerError("REJECT_ALPHA", f"alpha must be < 1, got {alpha}")
    if alpha < 0.0:
        raise PlannerError("BAD_ALPHA", f"alpha must be >= 0, got {alpha}")
    return c, p


def cvar_primal(costs: Sequence[float], probs: Sequence[float], alpha: float) -> CvarResult:
    """Minimise ``theta + E[(c - theta)+] / (1 - alpha)`` over theta.

    The objective is piecewise linear and convex in theta with breakpoints at
    the cost values, so scanning them finds the minimum. The smallest
    minimiser is returned as VaR.
    """
    c, p = _check(costs, probs, alpha)
    cand = np.unique(c)
    excess = np.maximum(c[None, :] - cand[:, None], 0.0)
    vals = cand + (excess @ p) / (1.0 - alpha)
    best = vals.min()
    k = int(np.flatnonzero(vals <= best + 1e-12 * max(1.0, abs(best)))[0])
    return CvarResult(var=float(cand[k]), cvar=float(vals[k]))


def cvar_dual(costs: Sequence[float], probs: Sequence[float], alpha: float) -> CvarResult:
    """Worst-case reweighting: put mass ``1 - alpha`` on the costliest scenarios first."""
    c, p = _check(costs, probs, alpha)
    if alpha == 0.0:
        raise PlannerError("REJECT_ALPHA", "the dual form needs alpha in (0, 1); use cvar_primal for alpha = 0")
    order = np.argsort(-c, kind="stable")
    q = np.zeros_like(p)
    left = 1.0 - alpha
    var = float(c[order[0]])
    for w in order:
        if left <= 0.0:
            break
        take = min(p[w], left)
        q[w] = take
        left -= take
        var = float(c[w])
    return CvarResult(var=var, cvar=float(q @ c) / (1.0 - alpha), weights=q)


# ---------------------------------------------------------------- stochastic values


@dataclass
class StochasticValueReport:
    eev: float
    ss: float
    ws: float
    cvar_ss: float
    alpha: float
    n_trains: int
    n_scenarios: int
    ev_first_stage: dict[str, int] = field(default_factory=dict)
    ss_first_stage: dict[str, int] = field(default_factory=dict)
    unavailable: dict[str, str] = field(default_factory=dict)  # metric -> cause

    @property
    def vss(self) -> float:
        return self.eev - self.ss

    @property
    def evpi(self) -> float:
        return self.ss - self.ws

    @property
    def vss_pct(self) -> float:
        return 100.0 * self.vss / self.ss if self.ss else math.nan

    def ordering_holds(self, tol: float) -> bool:
        """``WS <= SS <= EEV`` up to ``tol`` relative to SS."""
        slack = tol * max(1.0, abs(self.ss))
        return self.ws <= self.ss + slack and self.ss <= self.eev + slack


def _solve_one(job):
    inst, scen, cfg, fix, use_transfer, epsilon = job
    out = solve_instance(inst, scen, RiskParams(0.0, 0.5), cfg, epsilon=epsilon, use_transfer=use_transfer,
                         fix_first_stage=fix)
    return out.status, out.objective, out.plan.y if out.plan else None


def stochastic_values(inst: Instance, scen: ScenarioSet, cfg: SolverConfig | None = None, alpha: float = 0.75,
                      workers: int = 1, use_transfer: bool = False,
                      epsilon: float | None = None) -> StochasticValueReport:
    """SS, EEV and WS at lambda = 0, plus CVaR of the SS plan's per-scenario total cost."""
    cfg = cfg or SolverConfig()
    probs = scen.probabilities
    unavailable: dict[str, str] = {}

    ss_out = solve_instance(inst, scen, RiskParams(0.0, alpha), cfg, epsilon=epsilon, use_transfer=use_transfer)
    ss = ss_out.objective if ss_out.status == "optimal" else math.nan
    cvar_ss = math.nan
    ss_y: dict[str, int] = {}
    if ss_out.plan is not None and ss_out.status == "optimal":
        cvar_ss = cvar_primal(ss_out.plan.total_costs, probs, alpha).cvar
        ss_y = dict(ss_out.plan.y)
    else:
        unavailable["SS"] = f"stochastic model ended with status {ss_out.status}"

    mean = single(mean_value_scenario(scen, inst.cost.unmet_penalty))
    ev_status, _, ev_y = _solve_one((inst, mean, cfg, None, use_transfer, epsilon))
    jobs = [(inst, single(s), cfg, None, use_transfer, epsilon) for s in scen]
    if ev_status == "optimal":
        jobs += [(inst, single(s), cfg, ev_y, use_transfer, epsilon) for s in scen]
    else:
        unavailable["EEV"] = f"mean-value model ended with status {ev_status}"
    results = map_ordered(_solve_one, jobs, workers)
    S = len(scen)
    ws_res, eev_res = results[:S], results[S:]

    ws = math.nan
    if all(r[0] == "optimal" for r in ws_res):
        ws = probability_sum([r[1] for r in ws_res], probs)
    else:
        bad = [w for w, r in enumerate(ws_res) if r[0] != "optimal"]
        unavailable["WS"] = f"perfect-foresight solve not optimal for scenarios {bad}"
    eev = math.nan
    if eev_res:
        if all(r[0] == "optimal" for r in eev_res):
            eev = probability_sum([r[1] for r in eev_res], probs)
        else:
            bad = [w for w, r in enumerate(eev_res) if r[0] != "optimal"]
            unavailable["EEV"] = f"recourse under the mean-value plan not optimal for scenarios {bad}"

    return StochasticValueReport(eev=eev, ss=ss, ws=ws, cvar_ss=cvar_ss, alpha=alpha, n_trains=len(inst.trains),
                                 n_scenarios=S, ev_first_stage=dict(ev_y or {}), ss_first_stage=ss_y,
                                 unavailable=unavailable)


TABLE_COLUMNS = ("Trains", "Scen", "EEV", "SS", "WS", "VSS", "EVPI", "VSS(%)", "CVaR_SS")


def report_row(rep: StochasticValueReport, scale: float = REPORT_SCALE) -> dict[str, str]:
    def money(v: float) -> str:
        return "" if math.isnan(v) else f"{v * scale:.2f}"

    return {
        "Trains": str(rep.n_trains),
        "Scen": str(rep.n_scenarios),
        "EEV": money(rep.eev),
        "SS": money(rep.ss),
        "WS": money(rep.ws),
        "VSS": money(rep.vss),
        "EVPI": money(rep.evpi),
        "VSS(%)": "" if math.isnan(rep.vss_pct) else f"{rep.vss_pct:.1f}",
        "CVaR_SS": money(rep.cvar_ss),
    }


def write_stochastic_values_csv(path: str | Path, reports: Sequence[StochasticValueReport],
                                scale: float = REPORT_SCALE) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for rep in reports:
            writer.writerow(report_row(rep, scale))
