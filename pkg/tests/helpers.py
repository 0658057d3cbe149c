"""Shared test helpers: random instances and independent reference solvers."""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from intermodal.instance import Arc, CostParams, EmissionParams, Hub, Instance, Origin, Stop, Train
from intermodal.scenarios import Scenario, ScenarioSet

FIXTURES = Path(__file__).parent / "fixtures"


def random_instance(rng: np.random.Generator, origins=2, hubs=2, trains=2, scenarios=3, periods=4,
                    transfer=False) -> tuple[Instance, ScenarioSet]:
    hub_objs = tuple(Hub(f"h{j}") for j in range(hubs))
    origin_objs = tuple(
        Origin(f"o{i}", float(rng.integers(1, 5)), int(rng.integers(2, 9)),
               {h.id: Arc(int(rng.integers(1, 3)), float(rng.integers(5, 20)),
                          int(rng.integers(0, 2)) if transfer else 0,
                          float(rng.integers(0, 6)) if transfer else 0.0)
                for h in hub_objs if rng.random() < 0.85})
        for i in range(origins))
    train_objs = []
    for n in range(trains):
        k = int(rng.integers(1, hubs + 1))
        route = rng.permutation(hubs)[:k]
        deps = np.sort(rng.choice(np.arange(1, max(periods, k) + 2), size=k, replace=False))
        train_objs.append(Train(f"t{n}", tuple(Stop(f"h{j}", int(d)) for j, d in zip(route, deps))))
    inst = Instance(origin_objs, hub_objs, tuple(train_objs), periods,
                    CostParams(float(rng.integers(30, 80)), float(rng.integers(1, 10))),
                    EmissionParams(float(rng.integers(2, 15)),
                                   tuple(float(r) for r in np.round(rng.uniform(0.2, 1.5, periods), 2))))
    probs = rng.dirichlet(np.ones(scenarios))
    probs[-1] = 1.0 - probs[:-1].sum()
    scen = []
    for w in range(scenarios):
        cap = {(s.hub, t.id): int(rng.integers(0, 6)) for t in train_objs for s in t.stops}
        dem = {t.id: int(rng.integers(0, 10)) for t in train_objs}
        scen.append(Scenario(cap, dem, float(probs[w])))
    return inst, ScenarioSet(tuple(scen))


def highs_optimum(model) -> float:
    """Reference optimum from scipy's HiGHS interface."""
    A = model.A.toarray()
    lo = np.where(model.sense >= 0, model.rhs, -np.inf)
    hi = np.where(model.sense <= 0, model.rhs, np.inf)
    res = milp(model.c, constraints=LinearConstraint(A, lo, hi), integrality=model.integer.astype(int),
               bounds=Bounds(model.lb, model.ub), options={"mip_rel_gap": 1e-9})
    assert res.status == 0, res.message
    return float(res.fun + model.obj_const)


def enumerate_optimum(model, limit: int = 200_000) -> float:
    """Exhaustive enumeration over every integer point inside the bounds.

    Rows touching only integer columns are checked directly; for the rest the
    continuous columns are optimised with an LP, once per distinct residual.
    """
    A = model.A.toarray()
    ints = np.flatnonzero(model.integer)
    cont = np.flatnonzero(~model.integer)
    ranges = [np.arange(model.lb[k], model.ub[k] + 1) for k in ints]
    assert np.prod([len(r) for r in ranges], dtype=float) <= limit
    pts = np.array(list(itertools.product(*ranges)), dtype=float)
    act = pts @ A[:, ints].T
    cont_rows = np.abs(A[:, cont]).sum(axis=1) > 0
    tol = 1e-9
    ok = np.ones(len(pts), dtype=bool)
    for r in np.flatnonzero(~cont_rows):
        s, b = model.sense[r], model.rhs[r]
        ok &= (act[:, r] <= b + tol) if s < 0 else (act[:, r] >= b - tol) if s > 0 else (np.abs(act[:, r] - b) <= tol)
    pts, act = pts[ok], act[ok]
    base = pts @ model.c[ints] + model.obj_const
    rows = np.flatnonzero(cont_rows)
    Ac = A[np.ix_(rows, cont)]
    best = np.inf
    cache: dict[bytes, float] = {}
    for p, a, cost in zip(pts, act, base):
        resid = model.rhs[rows] - a[rows]
        key = np.round(resid, 9).tobytes()
        if key not in cache:
            cache[key] = _continuous_lp(Ac, resid, model.sense[rows], model.c[cont], model.lb[cont], model.ub[cont])
        best = min(best, cost + cache[key])
    return float(best)


def _continuous_lp(A, b, sense, c, lb, ub) -> float:
    le = sense < 0
    ge = sense > 0
    eq = sense == 0
    A_ub = np.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([b[le], -b[ge]])
    res = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=b[eq] if eq.any() else None,
                  bounds=list(zip(lb, ub)), method="highs")
    return float(res.fun) if res.status == 0 else np.inf
