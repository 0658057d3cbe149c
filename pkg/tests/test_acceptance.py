"""Acceptance suite: one group of tests per criterion, each at its tolerance and time budget.

Run ``pytest tests/test_acceptance.py -v`` and read the per-criterion lines
printed at the end of the session.
"""

from __future__ import annotations

import csv
import json
import time

import numpy as np
import pytest

import intermodal.pipeline as pipeline
from helpers import FIXTURES, enumerate_optimum, random_instance
from intermodal.experiments import (SweepSpec, non_decreasing, non_increasing, run_capacity_grid,
                                    run_emissions_grid, run_risk_grid, shrinking_after_knee)
from intermodal.instance import time_feasible
from intermodal.io import load, load_document
from intermodal.model import RiskParams, build_milp
from intermodal.risk import StochasticValueReport, cvar_dual, cvar_primal, report_row, stochastic_values
from intermodal.solver import SolverConfig, check_solution, solve_milp

GAP = SolverConfig().gap
CERTIFIED: list[int] = []  # violation count of every incumbent certified during this module


@pytest.fixture(autouse=True, scope="module")
def record_certificates():
    original = pipeline.check_solution

    def recording(model, v, tol=1e-6):
        bad = original(model, v, tol)
        CERTIFIED.append(len(bad))
        return bad

    pipeline.check_solution = recording
    yield
    pipeline.check_solution = original


def criterion(cid, title):
    return pytest.mark.criterion(cid, title)


# ---------------------------------------------------------------- AC1, AC2


@criterion("AC1", "CVaR primal and dual forms agree on 1000 fuzzed cases")
def test_cvar_forms_agree_on_fuzzed_cases():
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        s = int(rng.integers(2, 51))
        costs = rng.uniform(-100, 1000, s)
        if rng.random() < 0.3:
            costs = np.round(costs / 50) * 50  # force ties
        probs = rng.dirichlet(np.ones(s))
        probs /= probs.sum()
        alpha = float(rng.uniform(0.01, 0.99))
        a, b = cvar_primal(costs, probs, alpha), cvar_dual(costs, probs, alpha)
        worst = max(worst, abs(a.cvar - b.cvar))
    assert worst <= 1e-9
    assert time.perf_counter() - start < 5.0


@criterion("AC2", "CVaR spot values on four equiprobable costs")
@pytest.mark.parametrize("alpha,expected", [(0.75, 40.0), (0.5, 35.0), (0.0, 25.0)])
def test_cvar_spot_values(alpha, expected):
    costs, probs = [10, 20, 30, 40], [0.25] * 4
    assert cvar_primal(costs, probs, alpha).cvar == pytest.approx(expected, abs=1e-12)
    if alpha > 0:
        assert cvar_dual(costs, probs, alpha).cvar == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------- AC3


def _reference_rows():
    with open(FIXTURES / "reference_values.csv", newline="") as fh:
        return list(csv.DictReader(fh))


# Two published values are one unit off in the last digit from the identity
# applied to the published inputs; see the decision ledger.
_OFF_BY_ROUNDING = {("7", "6"): "VSS", ("7", "3"): "EVPI"}


def _reference_params():
    out = []
    for row in _reference_rows():
        key = (row["Trains"], row["Scen"])
        marks = []
        if key in _OFF_BY_ROUNDING:
            marks.append(pytest.mark.xfail(strict=True, reason=f"published {_OFF_BY_ROUNDING[key]} differs from "
                                                               "the identity by 0.01"))
        out.append(pytest.param(row, id=f"{key[0]}trains-{key[1]}scen", marks=marks))
    return out


@criterion("AC3", "VSS and EVPI identities reproduce the published value table")
@pytest.mark.parametrize("row", _reference_params())
def test_value_identities_on_published_table(row):
    k = 1e3
    rep = StochasticValueReport(eev=float(row["EEV"]) * k, ss=float(row["SS"]) * k, ws=float(row["WS"]) * k,
                                cvar_ss=float(row["CVaR_SS"]) * k, alpha=0.75, n_trains=int(row["Trains"]),
                                n_scenarios=int(row["Scen"]))
    out = report_row(rep)
    assert out["VSS(%)"] == row["VSS(%)"]
    assert (out["VSS"], out["EVPI"]) == (row["VSS"], row["EVPI"])


# ---------------------------------------------------------------- AC4


@criterion("AC4", "WS <= SS <= EEV on 50 fuzzed instances")
def test_stochastic_value_ordering():
    rng = np.random.default_rng(20240)
    start = time.perf_counter()
    positive_vss = 0
    for _ in range(50):
        inst, scen = random_instance(rng, origins=int(rng.integers(1, 3)), hubs=int(rng.integers(1, 5)),
                                     trains=int(rng.integers(1, 4)), scenarios=int(rng.integers(1, 7)),
                                     periods=int(rng.integers(2, 6)))
        rep = stochastic_values(inst, scen)
        assert not rep.unavailable, rep.unavailable
        assert rep.ordering_holds(2 * GAP), (rep.ws, rep.ss, rep.eev)
        positive_vss += rep.vss > 2 * GAP * max(1.0, abs(rep.ss))
    assert positive_vss > 0  # the suite exercises non-trivial cases
    assert time.perf_counter() - start < 120.0


# ---------------------------------------------------------------- AC5


def _small_corpus():
    named = ["tiny"] + sorted(str(p) for p in FIXTURES.glob("*.json"))
    out = []
    for name in named:
        inst, scen = load(name)
        if build_milp(inst, scen, RiskParams()).integer.sum() <= 12:
            out.append(name)
    return out


@criterion("AC5", "B&B optimum equals exhaustive enumeration on small instances")
def test_enumeration_equivalence():
    start = time.perf_counter()
    corpus = _small_corpus()
    assert len(corpus) >= 4
    for name in corpus:
        inst, scen = load(name)
        for risk in (RiskParams(0.0, 0.5), RiskParams(0.5, 0.5), RiskParams(1.0, 0.9)):
            model = build_milp(inst, scen, risk)
            res = solve_milp(model)
            assert res.status == "optimal"
            assert check_solution(model, res.x) == []
            CERTIFIED.append(0)
            assert res.objective == pytest.approx(enumerate_optimum(model), abs=1e-9), name
    assert time.perf_counter() - start < 30.0


@criterion("AC5", "B&B optimum equals exhaustive enumeration on small instances")
def test_tiny_optimum_is_136():
    inst, scen = load("tiny")
    out = pipeline.solve_instance(inst, scen, RiskParams(0.0, 0.5))
    assert out.status == "optimal"
    assert out.objective == 136.0
    assert out.plan.y == {"O1": 3}


# ---------------------------------------------------------------- AC6, AC7, AC8


@pytest.fixture(scope="module")
def medium():
    return load("medium")


@criterion("AC6", "objective non-decreasing in lambda on the medium instance")
@pytest.mark.slow
def test_lambda_monotonicity(medium):
    inst, scen = medium
    start = time.perf_counter()
    table = run_risk_grid(inst, scen, SweepSpec("risk-grid"), SolverConfig())
    elapsed = time.perf_counter() - start
    assert not table.failures
    assert len(table.rows) == 44
    for alpha in (0.25, 0.5, 0.75, 0.9):
        rows = sorted(table.where(alpha=alpha), key=lambda r: r["lambda"])
        assert [r["lambda"] for r in rows] == pytest.approx([k / 10 for k in range(11)])
        assert non_decreasing([r["OBJ"] for r in rows], 2 * GAP), alpha
    assert elapsed < 300.0


@criterion("AC7", "objective non-increasing in the emission cap, flat above the maximum")
@pytest.mark.slow
def test_epsilon_monotonicity_and_plateau(medium):
    inst, scen = medium
    start = time.perf_counter()
    for lam, alpha in ((0.25, 0.25), (0.5, 0.5), (0.5, 0.75)):
        spec = SweepSpec.emissions()
        spec.lambdas, spec.alphas = (lam,), (alpha,)
        table = run_emissions_grid(inst, scen, spec, SolverConfig())
        assert not table.failures
        rows = sorted(table.rows, key=lambda r: r["epsilon"])
        assert len(rows) == 15
        objs = [r["OBJ"] for r in rows]
        assert non_increasing(objs, 2 * GAP)
        cap = rows[0]["max_emissions"]
        above = [r["OBJ"] for r in rows if r["epsilon"] > cap]
        assert len(above) >= 2  # the grid reaches past the maximum possible emissions
        assert max(above) - min(above) <= 2 * GAP * max(1.0, abs(above[0]))
        assert all(r["above_max_emissions"] == (r["epsilon"] > cap) for r in rows)
    assert time.perf_counter() - start < 300.0


@criterion("AC8", "capacity sweep: cost and unmet fall, unmet reaches zero, drops shrink past the knee")
@pytest.mark.slow
def test_capacity_trend():
    inst, scen = load("capacity")
    assert (len(inst.trains), len(scen)) == (4, 8)
    start = time.perf_counter()
    table = run_capacity_grid(inst, scen, SweepSpec("capacity-grid"), SolverConfig())
    assert not table.failures
    rows = sorted(table.rows, key=lambda r: r["capacity"])
    costs = [r["total_cost"] for r in rows]
    unmet = [r["unmet"] for r in rows]
    assert non_increasing(costs, 2 * GAP)
    assert non_increasing(unmet, 0.0)
    assert unmet[0] > 0 and unmet[-1] == 0
    holds, knee = shrinking_after_knee(costs)
    assert holds and knee < len(costs) - 2
    assert time.perf_counter() - start < 300.0


# ---------------------------------------------------------------- AC9


def _census(inst, scen, use_transfer=False):
    """Tallies straight from the variable and row family definitions."""
    O, N, S = len(inst.origins), len(inst.trains), len(scen)
    R = sum(len(t.stops) for t in inst.trains)
    hub_pos = {h.id: j for j, h in enumerate(inst.hubs)}
    cells = sum(time_feasible(inst, i, hub_pos[stop.hub], n, t, use_transfer)
                for i in range(O) for n, train in enumerate(inst.trains) for stop in train.stops
                for t in range(inst.periods))
    H = S * cells
    n_vars = O + 2 * H + S * N + S * R + S + S + 1
    # per scenario: supply O, capacity R, emissions 1, first-stop inventory N,
    # later-stop inventory R - N, demand N, final inventory N, CVaR 1; plus H linking rows
    n_rows = S * (O + R + 1 + N + (R - N) + N + N + 1) + H
    return n_vars, n_rows


@criterion("AC9", "variable and row counts match the closed-form census")
def test_model_census():
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    for k in range(200):
        transfer = bool(k % 2)
        inst, scen = random_instance(rng, origins=int(rng.integers(1, 4)), hubs=int(rng.integers(1, 5)),
                                     trains=int(rng.integers(1, 4)), scenarios=int(rng.integers(1, 5)),
                                     periods=int(rng.integers(1, 7)), transfer=transfer)
        model = build_milp(inst, scen, RiskParams(0.3, 0.6), use_transfer=transfer)
        assert (model.n_vars, model.n_rows) == _census(inst, scen, transfer)
    assert time.perf_counter() - start < 10.0


# ---------------------------------------------------------------- AC10


def _strip_transfer(doc, zero: bool):
    doc = json.loads(json.dumps(doc))
    for origin in doc["origins"]:
        for arc in origin["arcs"].values():
            arc.pop("transfer_time", None)
            arc.pop("transfer_cost", None)
            if zero:
                arc["transfer_time"] = 0
                arc["transfer_cost"] = 0
    return doc


def _docs():
    return [FIXTURES / "transfer.json", FIXTURES / "two_stops.json"]


def _same_model(a, b):
    assert (a.A != b.A).nnz == 0 and a.A.shape == b.A.shape
    for field in ("c", "rhs", "sense", "lb", "ub", "integer"):
        assert np.array_equal(getattr(a, field), getattr(b, field)), field
    assert a.obj_const == b.obj_const and a.row_names == b.row_names


@criterion("AC10", "transfer extension: zero transfer is a no-op, positive transfer never helps")
@pytest.mark.parametrize("path", _docs(), ids=lambda p: p.stem)
def test_zero_transfer_is_identical(path):
    doc = json.loads(path.read_text())
    plain = load_document(_strip_transfer(doc, zero=False))
    zeroed = load_document(_strip_transfer(doc, zero=True))
    risk = RiskParams(0.5, 0.75)
    m0 = build_milp(*plain, risk)
    m1 = build_milp(*zeroed, risk, use_transfer=True)
    _same_model(m0, m1)
    r0, r1 = solve_milp(m0), solve_milp(m1)
    assert r0.status == r1.status == "optimal"
    assert r0.objective == r1.objective
    assert np.array_equal(r0.x, r1.x)


@criterion("AC10", "transfer extension: zero transfer is a no-op, positive transfer never helps")
@pytest.mark.parametrize("name", [str(FIXTURES / "transfer.json"), "capacity", "medium"])
def test_positive_transfer_shrinks_and_costs_more(name):
    inst, scen = load(name)
    assert any(a.transfer_time > 0 or a.transfer_cost > 0 for o in inst.origins for a in o.arcs.values())
    risk = RiskParams(0.0, 0.75)
    base = build_milp(inst, scen, risk)
    ext = build_milp(inst, scen, risk, use_transfer=True)
    lay_b, lay_e = base.layout, ext.layout

    def cells(lay):
        return set(zip(lay.cell_scenario, lay.cell_origin, lay.cell_train, lay.cell_stop, lay.cell_period))

    assert cells(lay_e) <= cells(lay_b)
    if any(a.transfer_time > 0 for o in inst.origins for a in o.arcs.values()):
        assert len(cells(lay_e)) < len(cells(lay_b))
    b = pipeline.solve_instance(inst, scen, risk)
    e = pipeline.solve_instance(inst, scen, risk, use_transfer=True)
    assert b.status == e.status == "optimal"
    assert e.objective >= b.objective - 2 * GAP * max(1.0, abs(b.objective))


# ---------------------------------------------------------------- AC11


@criterion("AC11", "every optimal incumbent passes the feasibility certificate")
def test_every_incumbent_certified():
    if not CERTIFIED:  # run in isolation: certify a few fresh solves
        for name in ["tiny", str(FIXTURES / "two_scenarios.json")]:
            inst, scen = load(name)
            pipeline.solve_instance(inst, scen, RiskParams(0.5, 0.5))
    assert CERTIFIED
    assert all(n == 0 for n in CERTIFIED)

