"""Deterministic-equivalent MILP for the two-stage CVaR intermodal plan.

Variable blocks, in column order::

    y[i]          containers prepared at origin i            integer
    x[cell]       dispatch cell (i, j, n, t) per scenario     integer
    z[cell]       route activation, mirrors x                 binary (optional)
    U[n, w]       unmet demand                                integer
    I[stop, w]    inventory on train n after stop j           integer
    eta[w]        emissions above the cap                     continuous >= 0
    theta         value-at-risk                               continuous, free
    xi[w]         cost excess over theta                      continuous >= 0

Only time-feasible dispatch cells get an x column, so late dispatches are
impossible by construction.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

from .errors import PlannerError
from .instance import Instance, latest_dispatch
from .scenarios import ScenarioSet, resolve_penalties

LE, EQ, GE = -1, 0, 1
INTEGRALITY_TOL = 1e-6


@dataclass(frozen=True)
class RiskParams:
    lam: float = 0.0
    alpha: float = 0.75

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise PlannerError("BAD_LAMBDA", f"lambda must lie in [0, 1], got {self.lam}")
        if not self.alpha < 1.0:
            raise PlannerError("REJECT_ALPHA", f"alpha must be < 1, got {self.alpha}")
        if self.alpha < 0.0:
            raise PlannerError("BAD_ALPHA", f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class VariableLayout:
    n_origins: int
    n_trains: int
    n_stops: int
    n_scenarios: int
    linking: bool
    # one entry per x column, scenario-major
    cell_scenario: np.ndarray
    cell_origin: np.ndarray
    cell_train: np.ndarray
    cell_stop: np.ndarray  # global stop index (train-major route order)
    cell_period: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.cell_origin)

    @property
    def y(self) -> slice:
        return slice(0, self.n_origins)

    @property
    def x(self) -> slice:
        s = self.n_origins
        return slice(s, s + self.n_cells)

    @property
    def z(self) -> slice:
        s = self.x.stop
        return slice(s, s + (self.n_cells if self.linking else 0))

    @property
    def u(self) -> slice:
        s = self.z.stop
        return slice(s, s + self.n_scenarios * self.n_trains)

    @property
    def inv(self) -> slice:
        s = self.u.stop
        return slice(s, s + self.n_scenarios * self.n_stops)

    @property
    def eta(self) -> slice:
        s = self.inv.stop
        return slice(s, s + self.n_scenarios)

    @property
    def theta(self) -> int:
        return self.eta.stop

    @property
    def xi(self) -> slice:
        s = self.theta + 1
        return slice(s, s + self.n_scenarios)

    @property
    def n_vars(self) -> int:
        return self.xi.stop

    def u_index(self, n: int, w: int) -> int:
        return self.u.start + w * self.n_trains + n

    def inv_index(self, r: int, w: int) -> int:
        return self.inv.start + w * self.n_stops + r

    def blocks(self) -> list[tuple[str, slice]]:
        return [("y", self.y), ("x", self.x), ("z", self.z), ("U", self.u), ("I", self.inv),
                ("eta", self.eta), ("theta", slice(self.theta, self.theta + 1)), ("xi", self.xi)]

    def describe(self, col: int) -> tuple[str, tuple[int, ...]]:
        """Reverse map: column -> (family, index tuple)."""
        if not 0 <= col < self.n_vars:
            raise PlannerError("INDEX_OUT_OF_RANGE", f"column {col} outside layout")
        for name, blk in self.blocks():
            if blk.start <= col < blk.stop:
                k = col - blk.start
                if name == "y":
                    return name, (k,)
                if name in ("x", "z"):
                    return name, (int(self.cell_origin[k]), int(self.cell_stop[k]), int(self.cell_train[k]),
                                  int(self.cell_scenario[k]), int(self.cell_period[k]))
                if name == "U":
                    return name, (k % self.n_trains, k // self.n_trains)
                if name == "I":
                    return name, (k % self.n_stops, k // self.n_stops)
                if name == "theta":
                    return name, ()
                return name, (k,)
        raise AssertionError("unreachable")


@dataclass
class MilpModel:
    """Minimise ``c @ v + obj_const`` s.t. ``A v (sense) rhs``, bounds, integrality."""

    c: np.ndarray
    obj_const: float
    A: sp.csr_matrix
    sense: np.ndarray  # LE / EQ / GE per row
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray  # bool per column
    row_names: list[str]
    layout: VariableLayout | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    def objective(self, v: np.ndarray) -> float:
        return float(self.c @ v + self.obj_const)

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "MilpModel":
        return MilpModel(self.c, self.obj_const, self.A, self.sense, self.rhs, lb, ub, self.integer,
                         self.row_names, self.layout, self.meta)


def big_m(inst: Instance, scen: ScenarioSet, i: int, j: int, n: int, w: int) -> int:
    """Tightest valid flow bound for one dispatch cell: min(kappa, K, D)."""
    hub = inst.hubs[j].id
    train = inst.trains[n].id
    return int(min(inst.origins[i].max_prepare, scen[w].capacity.get((hub, train), 0), scen[w].demand.get(train, 0)))


def _feasible_cells(inst: Instance, use_transfer: bool) -> list[tuple[int, int, int, int]]:
    """Time-feasible (origin, train, global stop, period) tuples in build order."""
    cells = []
    r = 0
    for n, train in enumerate(inst.trains):
        for k, _ in enumerate(train.stops):
            for i in range(len(inst.origins)):
                last = latest_dispatch(inst, i, n, k, use_transfer)
                for t in range(last + 1):
                    cells.append((i, n, r, t))
            r += 1
    return cells


def expected_size(inst: Instance, scen: ScenarioSet, use_transfer: bool = False,
                  linking: bool = True) -> tuple[int, int]:
    """Closed-form (variables, rows) tallies for the built model."""
    O, N, R, S = len(inst.origins), len(inst.trains), inst.stop_count, len(scen)
    H = S * len(_feasible_cells(inst, use_transfer))
    n_vars = O + (2 if linking else 1) * H + S * N + S * R + S + S + 1
    # supply O, capacity R, emissions 1, first-station N, later stations R-N,
    # demand N, final inventory N, cvar 1  (per scenario) + linking H
    n_rows = S * (O + R + 1 + N + (R - N) + N + N + 1) + (H if linking else 0)
    return n_vars, n_rows


class _Rows:
    def __init__(self):
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.sense: list[int] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def add(self, name: str, cols, vals, sense: int, rhs: float) -> None:
        r = len(self.rhs)
        self.rows.extend([r] * len(cols))
        self.cols.extend(int(c) for c in cols)
        self.vals.extend(float(v) for v in vals)
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.names.append(name)


def build_milp(inst: Instance, scen: ScenarioSet, risk: RiskParams, epsilon_override: float | None = None,
               use_transfer: bool = False, linking: bool = True) -> MilpModel:
    if risk.alpha >= 1.0:
        raise PlannerError("REJECT_ALPHA", "alpha must be < 1")
    O, N, R, S = len(inst.origins), len(inst.trains), inst.stop_count, len(scen)
    base_cells = _feasible_cells(inst, use_transfer)
    Hs = len(base_cells)
    cell_arr = np.array(base_cells, dtype=np.int64).reshape(-1, 4)
    layout = VariableLayout(
        n_origins=O, n_trains=N, n_stops=R, n_scenarios=S, linking=linking,
        cell_scenario=np.repeat(np.arange(S, dtype=np.int64), Hs),
        cell_origin=np.tile(cell_arr[:, 0], S),
        cell_train=np.tile(cell_arr[:, 1], S),
        cell_stop=np.tile(cell_arr[:, 2], S),
        cell_period=np.tile(cell_arr[:, 3], S),
    )
    stop_hub = [inst.hub_index[stop.hub] for _, _, stop in inst.stops()]
    stop_train = [n for n, _, _ in inst.stops()]
    first_stop = []
    r = 0
    for train in inst.trains:
        first_stop.append(r)
        r += len(train.stops)

    probs = scen.probabilities
    penalties = resolve_penalties(scen, inst.cost.unmet_penalty)
    lam, alpha = risk.lam, risk.alpha
    eps = inst.emissions.cap if epsilon_override is None else float(epsilon_override)
    rho = inst.cost.emissions_penalty

    # per base cell constants
    unit_cost = np.empty(Hs)
    emis = np.empty(Hs)
    for h, (i, n, r, t) in enumerate(base_cells):
        arc = inst.origins[i].arcs[inst.hubs[stop_hub[r]].id]
        unit_cost[h] = arc.cost + (arc.transfer_cost if use_transfer else 0.0)
        emis[h] = inst.emissions.rate[t] * arc.travel_time

    nv = layout.n_vars
    c = np.zeros(nv)
    lb = np.zeros(nv)
    ub = np.full(nv, np.inf)
    integer = np.zeros(nv, dtype=bool)

    ys = layout.y
    c[ys] = [o.prep_cost for o in inst.origins]
    ub[ys] = [o.max_prepare for o in inst.origins]
    integer[ys] = True

    xs, zs = layout.x, layout.z
    integer[xs] = True
    integer[zs] = True
    integer[layout.u] = True
    integer[layout.inv] = True
    ub[zs] = 1.0
    lb[layout.theta] = -np.inf

    rows = _Rows()
    for w in range(S):
        sc = scen[w]
        p = probs[w]
        off = xs.start + w * Hs
        xcols = np.arange(off, off + Hs)
        demand = [sc.demand.get(t.id, 0) for t in inst.trains]
        cap = [sc.capacity.get((inst.hubs[stop_hub[r]].id, inst.trains[stop_train[r]].id), 0) for r in range(R)]
        M = np.array([min(inst.origins[i].max_prepare, cap[r], demand[n]) for (i, n, r, t) in base_cells],
                     dtype=float).reshape(-1)

        c[xcols] = (1.0 - lam) * p * unit_cost
        ub[xcols] = M
        for n in range(N):
            col = layout.u_index(n, w)
            c[col] = (1.0 - lam) * p * penalties[w]
            ub[col] = demand[n]
        for r in range(R):
            ub[layout.inv_index(r, w)] = demand[stop_train[r]]
        c[layout.eta.start + w] = rho * p
        c[layout.xi.start + w] = lam * p / (1.0 - alpha)

        # (6) supply
        for i in range(O):
            sel = xcols[cell_arr[:, 0] == i]
            rows.add(f"c06_supply({i},{w})", [*sel, ys.start + i], [1.0] * len(sel) + [-1.0], LE, 0.0)
        # (7) spot capacity per train stop
        for r in range(R):
            sel = xcols[cell_arr[:, 2] == r]
            rows.add(f"c07_capacity({r},{w})", sel, [1.0] * len(sel), LE, cap[r])
        # (8) big-M linking
        if linking:
            for h in range(Hs):
                rows.add(f"c08_link({h},{w})", [xcols[h], zs.start + w * Hs + h], [1.0, -M[h]], LE, 0.0)
        # (9) emissions cap
        nz = emis != 0.0
        rows.add(f"c09_emissions({w})", [*xcols[nz], layout.eta.start + w], [*emis[nz], -1.0], LE, eps)
        # (10) first station, (11) later stations
        for r in range(R):
            sel = xcols[cell_arr[:, 2] == r]
            me = layout.inv_index(r, w)
            if r in first_stop:
                rows.add(f"c10_inv_first({r},{w})", [me, *sel], [1.0] + [-1.0] * len(sel), EQ, 0.0)
            else:
                rows.add(f"c11_inv_next({r},{w})", [me, me - 1, *sel], [1.0, -1.0] + [-1.0] * len(sel), EQ, 0.0)
        # (12) demand balance
        for n in range(N):
            sel = xcols[cell_arr[:, 1] == n]
            rows.add(f"c12_demand({n},{w})", [*sel, layout.u_index(n, w)], [1.0] * (len(sel) + 1), EQ, demand[n])
        # (13) final inventory
        for n in range(N):
            last = first_stop[n] + len(inst.trains[n].stops) - 1
            rows.add(f"c13_inv_final({n},{w})", [layout.inv_index(last, w)], [1.0], LE, demand[n])
        # (23) xi_w >= c_ew - theta   ->   xi_w + theta - c_ew >= 0
        cost_cols, cost_vals = _scenario_cost_terms(layout, w, Hs, unit_cost, penalties[w])
        rows.add(f"c23_cvar({w})", [layout.xi.start + w, layout.theta, *cost_cols],
                 [1.0, 1.0, *(-cost_vals)], GE, 0.0)

    c[layout.theta] = lam
    A = sp.csr_matrix((rows.vals, (rows.rows, rows.cols)), shape=(len(rows.rhs), nv))
    A.sum_duplicates()
    model = MilpModel(
        c=c, obj_const=0.0, A=A, sense=np.array(rows.sense, dtype=np.int64), rhs=np.array(rows.rhs),
        lb=lb, ub=ub, integer=integer, row_names=rows.names, layout=layout,
        meta=dict(inst=inst, scen=scen, risk=risk, epsilon=eps, use_transfer=use_transfer, linking=linking,
                  unit_cost=unit_cost, emission_coef=emis, penalties=penalties, first_stage=ys,
                  round_repair=[ys, layout.u]),
    )
    n_vars, n_rows = expected_size(inst, scen, use_transfer, linking)
    if (n_vars, n_rows) != (model.n_vars, model.n_rows):
        raise AssertionError(f"census mismatch: built {(model.n_vars, model.n_rows)}, expected {(n_vars, n_rows)}")
    return model


def _scenario_cost_terms(layout: VariableLayout, w: int, Hs: int, unit_cost: np.ndarray,
                         penalty: float) -> tuple[np.ndarray, np.ndarray]:
    xcols = np.arange(layout.x.start + w * Hs, layout.x.start + (w + 1) * Hs)
    ucols = np.array([layout.u_index(n, w) for n in range(layout.n_trains)], dtype=np.int64)
    return np.concatenate([xcols, ucols]), np.concatenate([unit_cost, np.full(len(ucols), penalty)])


def scenario_cost_expr(model: MilpModel, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse (columns, coefficients) of the scenario's second-stage cost:
    transport (plus transfer when enabled) and unmet-demand penalty."""
    layout = model.layout
    if not 0 <= w < layout.n_scenarios:
        raise PlannerError("INDEX_OUT_OF_RANGE", f"scenario {w} outside 0..{layout.n_scenarios - 1}")
    Hs = layout.n_cells // layout.n_scenarios
    return _scenario_cost_terms(layout, w, Hs, model.meta["unit_cost"], model.meta["penalties"][w])


def max_possible_emissions(model: MilpModel) -> float:
    """Upper bound on any scenario's road emissions: every train's demand
    dispatched through its dirtiest feasible cell."""
    layout = model.layout
    inst: Instance = model.meta["inst"]
    scen: ScenarioSet = model.meta["scen"]
    Hs = layout.n_cells // max(layout.n_scenarios, 1)
    emis = model.meta["emission_coef"]
    trains = layout.cell_train[:Hs]
    worst = 0.0
    for sc in scen:
        total = 0.0
        for n, train in enumerate(inst.trains):
            sel = emis[trains == n]
            if len(sel):
                total += sc.demand.get(train.id, 0) * float(sel.max())
        worst = max(worst, total)
    return worst


# ---------------------------------------------------------------- decoding


@dataclass
class CostBreakdown:
    first_stage: float
    transport: np.ndarray  # per scenario, includes transfer cost when enabled
    unmet_penalty: np.ndarray  # per scenario
    emissions_penalty: np.ndarray  # per scenario (rho * eta)
    cvar: float  # theta + sum(p xi) / (1 - alpha)

    @property
    def scenario_cost(self) -> np.ndarray:
        return self.transport + self.unmet_penalty


@dataclass
class Plan:
    y: dict[str, int]
    flows: list[dict[tuple[str, str, str, int], int]]  # per scenario: (origin, hub, train, t) -> containers
    unmet: list[dict[str, int]]
    inventory: list[dict[tuple[str, str], int]]
    excess_emissions: np.ndarray
    emissions: np.ndarray  # road emissions per scenario
    theta: float
    xi: np.ndarray
    objective: float
    breakdown: CostBreakdown
    probabilities: np.ndarray
    risk: RiskParams

    @property
    def scenario_costs(self) -> np.ndarray:
        """Second-stage cost per scenario (transport + unmet penalty)."""
        return self.breakdown.scenario_cost

    @property
    def total_costs(self) -> np.ndarray:
        """Per-scenario total cost: first stage + second stage + emissions penalty."""
        b = self.breakdown
        return b.first_stage + b.scenario_cost + b.emissions_penalty

    @property
    def expected_second_stage(self) -> float:
        return float(self.probabilities @ self.scenario_costs)

    @property
    def expected_total(self) -> float:
        return float(self.probabilities @ self.total_costs)

    def weighted_objective(self) -> float:
        b = self.breakdown
        lam = self.risk.lam
        return (b.first_stage + (1 - lam) * self.expected_second_stage + lam * b.cvar
                + float(self.probabilities @ b.emissions_penalty))

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "lambda": self.risk.lam,
            "alpha": self.risk.alpha,
            "y": self.y,
            "theta": self.theta,
            "scenarios": [
                {
                    "probability": float(self.probabilities[w]),
                    "flows": [{"origin": k[0], "hub": k[1], "train": k[2], "t": k[3], "containers": v}
                              for k, v in sorted(self.flows[w].items())],
                    "unmet": self.unmet[w],
                    "inventory": [{"hub": k[0], "train": k[1], "containers": v}
                                  for k, v in sorted(self.inventory[w].items())],
                    "emissions": float(self.emissions[w]),
                    "excess_emissions": float(self.excess_emissions[w]),
                    "xi": float(self.xi[w]),
                    "transport_cost": float(self.breakdown.transport[w]),
                    "unmet_penalty": float(self.breakdown.unmet_penalty[w]),
                    "emissions_penalty": float(self.breakdown.emissions_penalty[w]),
                }
                for w in range(len(self.probabilities))
            ],
            "breakdown": {
                "first_stage": self.breakdown.first_stage,
                "expected_transport": float(self.probabilities @ self.breakdown.transport),
                "expected_unmet_penalty": float(self.probabilities @ self.breakdown.unmet_penalty),
                "expected_emissions_penalty": float(self.probabilities @ self.breakdown.emissions_penalty),
                "cvar": self.breakdown.cvar,
            },
        }


def decode(model: MilpModel, v: np.ndarray, solver_objective: float | None = None, tol: float = 1e-6) -> Plan:
    """Map a solution vector back to named quantities and re-derive its cost."""
    layout = model.layout
    v = np.asarray(v, dtype=float)
    if v.shape != (model.n_vars,):
        raise PlannerError("DECODE_INCONSISTENT", f"vector length {v.shape} != {model.n_vars}")
    ints = v[model.integer]
    frac = np.abs(ints - np.round(ints))
    if frac.size and frac.max() > INTEGRALITY_TOL:
        col = int(np.flatnonzero(model.integer)[frac.argmax()])
        raise PlannerError("DECODE_INCONSISTENT", f"integrality breach on {layout.describe(col)}: {v[col]}")
    vi = v.copy()
    vi[model.integer] = np.round(ints)

    inst: Instance = model.meta["inst"]
    risk: RiskParams = model.meta["risk"]
    probs = model.meta["scen"].probabilities
    S, N, R = layout.n_scenarios, layout.n_trains, layout.n_stops
    Hs = layout.n_cells // max(S, 1)
    stop_ids = [(stop.hub, inst.trains[n].id) for n, _, stop in inst.stops()]

    y = {o.id: int(vi[layout.y.start + i]) for i, o in enumerate(inst.origins)}
    xv = vi[layout.x]
    flows, unmet, inventory = [], [], []
    transport = np.zeros(S)
    unmet_pen = np.zeros(S)
    emissions = np.zeros(S)
    unit_cost = model.meta["unit_cost"]
    emis_coef = model.meta["emission_coef"]
    penalties = model.meta["penalties"]
    for w in range(S):
        block = xv[w * Hs:(w + 1) * Hs]
        fl = {}
        for h in np.flatnonzero(block):
            i, n, r, t = (int(layout.cell_origin[h]), int(layout.cell_train[h]),
                          int(layout.cell_stop[h]), int(layout.cell_period[h]))
            fl[(inst.origins[i].id, stop_ids[r][0], inst.trains[n].id, t)] = int(block[h])
        flows.append(fl)
        u = {inst.trains[n].id: int(vi[layout.u_index(n, w)]) for n in range(N)}
        unmet.append(u)
        inventory.append({stop_ids[r]: int(vi[layout.inv_index(r, w)]) for r in range(R)})
        transport[w] = float(unit_cost @ block)
        unmet_pen[w] = penalties[w] * sum(u.values())
        emissions[w] = float(emis_coef @ block)

    eta = vi[layout.eta].copy()
    xi = vi[layout.xi].copy()
    theta = float(vi[layout.theta])
    first = float(sum(o.prep_cost * y[o.id] for o in inst.origins))
    cvar = theta + float(probs @ xi) / (1.0 - risk.alpha)
    breakdown = CostBreakdown(first, transport, unmet_pen, inst.cost.emissions_penalty * eta, cvar)
    plan = Plan(y, flows, unmet, inventory, eta, emissions, theta, xi, 0.0, breakdown, probs, risk)

    recomputed = plan.weighted_objective()
    reference = model.objective(vi) if solver_objective is None else solver_objective
    if abs(recomputed - reference) > tol * max(1.0, abs(reference)):
        raise PlannerError("DECODE_INCONSISTENT",
                           f"breakdown sums to {recomputed!r} but objective is {reference!r}")
    plan.objective = reference
    return plan


# ---------------------------------------------------------------- LP text


_NAME_BAD = re.compile(r"[^A-Za-z0-9_.]")


def _var_names(model: MilpModel) -> list[str]:
    layout = model.layout
    if layout is None:
        return [f"v{k}" for k in range(model.n_vars)]
    inst: Instance = model.meta["inst"]
    stop_ids = [(stop.hub, inst.trains[n].id) for n, _, stop in inst.stops()]

    def clean(s: str) -> str:
        return _NAME_BAD.sub("_", s)

    names = []
    for col in range(model.n_vars):
        fam, idx = layout.describe(col)
        if fam == "y":
            names.append(f"y({clean(inst.origins[idx[0]].id)})")
        elif fam in ("x", "z"):
            i, r, n, w, t = idx
            names.append(f"{fam}({clean(inst.origins[i].id)},{clean(stop_ids[r][0])},"
                         f"{clean(inst.trains[n].id)},s{w},t{t})")
        elif fam == "U":
            names.append(f"U({clean(inst.trains[idx[0]].id)},s{idx[1]})")
        elif fam == "I":
            hub, train = stop_ids[idx[0]]
            names.append(f"I({clean(hub)},{clean(train)},s{idx[1]})")
        elif fam == "theta":
            names.append("theta")
        else:
            names.append(f"{fam}(s{idx[0]})")
    return names


def _fmt(v: float) -> str:
    return repr(float(v))


def _terms(cols, vals, names) -> str:
    parts = []
    for col, val in zip(cols, vals):
        if val == 0:
            continue
        sign = "-" if val < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(val))} {names[col]}")
    if not parts:
        return "0 " + names[0]
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_text(model: MilpModel) -> str:
    """Serialise to the CPLEX-style LP text format."""
    names = _var_names(model)
    out = ["\\ two-stage CVaR intermodal plan, deterministic equivalent", "Minimize"]
    nz = np.flatnonzero(model.c)
    obj = _terms(nz, model.c[nz], names)
    if model.obj_const:
        obj += f" + {_fmt(model.obj_const)} __const"
    out.append(f" obj: {obj}")
    out.append("Subject To")
    A = model.A.tocsr()
    op = {LE: "<=", EQ: "=", GE: ">="}
    for r in range(model.n_rows):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        out.append(f" {model.row_names[r]}: {_terms(A.indices[lo:hi], A.data[lo:hi], names)} "
                   f"{op[int(model.sense[r])]} {_fmt(model.rhs[r])}")
    out.append("Bounds")
    binaries = []
    generals = []
    for k in range(model.n_vars):
        lo, hi = model.lb[k], model.ub[k]
        if model.integer[k] and lo == 0 and hi == 1:
            binaries.append(names[k])
            continue
        if model.integer[k]:
            generals.append(names[k])
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" {names[k]} free")
        elif math.isinf(hi):
            if lo != 0:
                out.append(f" {names[k]} >= {_fmt(lo)}")
        elif math.isinf(lo):
            out.append(f" -inf <= {names[k]} <= {_fmt(hi)}")
        else:
            out.append(f" {_fmt(lo)} <= {names[k]} <= {_fmt(hi)}")
    if model.obj_const:
        out.append(" __const = 1")
    if generals:
        out.append("General")
        out.extend(f" {g}" for g in generals)
    if binaries:
        out.append("Binary")
        out.extend(f" {b}" for b in binaries)
    out.append("End")
    return "\n".join(out) + "\n"
