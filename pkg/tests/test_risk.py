import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instance
from intermodal.errors import PlannerError
from intermodal.io import load
from intermodal.risk import (StochasticValueReport, cvar_dual, cvar_primal, report_row, stochastic_values,
                             write_stochastic_values_csv)


@st.composite
def cost_sets(draw):
    n = draw(st.integers(1, 12))
    costs = draw(st.lists(st.integers(-50, 500), min_size=n, max_size=n))
    weights = draw(st.lists(st.integers(1, 20), min_size=n, max_size=n))
    p = np.array(weights, dtype=float)
    return np.array(costs, dtype=float), p / p.sum()


@settings(max_examples=200, deadline=None)
@given(cost_sets(), st.floats(0.01, 0.99))
def test_cvar_sits_between_mean_and_max(cp, alpha):
    c, p = cp
    res = cvar_primal(c, p, alpha)
    assert float(p @ c) - 1e-9 <= res.cvar <= c.max() + 1e-9
    assert res.var <= res.cvar + 1e-9


@settings(max_examples=200, deadline=None)
@given(cost_sets(), st.floats(0.01, 0.98), st.floats(0.001, 0.5))
def test_cvar_non_decreasing_in_alpha(cp, alpha, step):
    c, p = cp
    hi = min(alpha + step, 0.99)
    assert cvar_primal(c, p, alpha).cvar <= cvar_primal(c, p, hi).cvar + 1e-9


@settings(max_examples=200, deadline=None)
@given(cost_sets(), st.floats(0.01, 0.99))
def test_dual_weights_form_a_capped_tail(cp, alpha):
    c, p = cp
    res = cvar_dual(c, p, alpha)
    q = res.weights
    assert np.all(q >= -1e-15) and np.all(q <= p + 1e-15)
    assert q.sum() == pytest.approx(1 - alpha, abs=1e-12)
    assert res.cvar == pytest.approx(cvar_primal(c, p, alpha).cvar, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(cost_sets(), st.floats(0.01, 0.99), st.floats(-100, 100))
def test_cvar_translation_equivariant(cp, alpha, shift):
    c, p = cp
    a = cvar_primal(c, p, alpha).cvar
    assert cvar_primal(c + shift, p, alpha).cvar == pytest.approx(a + shift, abs=1e-7)


def test_var_is_smallest_minimiser():
    # tail mass exactly at a breakpoint: every theta in [20, 30] minimises
    res = cvar_primal([10, 20, 30, 40], [0.25] * 4, 0.5)
    assert res.var == 20.0


def test_dual_rejects_zero_alpha():
    with pytest.raises(PlannerError) as exc:
        cvar_dual([1, 2], [0.5, 0.5], 0.0)
    assert exc.value.code == "REJECT_ALPHA"


@pytest.mark.parametrize("args,code", [
    (([1, 2], [0.5, 0.5], 1.0), "REJECT_ALPHA"),
    (([1, 2], [0.5, 0.5], -0.1), "BAD_ALPHA"),
    (([1, 2], [0.7, 0.5], 0.5), "BAD_PROBABILITY"),
    (([1, 2, 3], [0.5, 0.5], 0.5), "LENGTH_MISMATCH"),
    (([], [], 0.5), "EMPTY_SET"),
    (([1, math.inf], [0.5, 0.5], 0.5), "NON_FINITE"),
])
def test_cvar_input_errors(args, code):
    with pytest.raises(PlannerError) as exc:
        cvar_primal(*args)
    assert exc.value.code == code


def test_stochastic_values_on_medium_instance():
    inst, scen = load("medium")
    rep = stochastic_values(inst, scen)
    assert not rep.unavailable
    assert rep.ordering_holds(2e-6)
    assert rep.vss > 0 and rep.evpi > 0
    assert rep.cvar_ss >= rep.ss - 1e-6  # tail of total cost is at least its mean
    assert set(rep.ev_first_stage) == {o.id for o in inst.origins}


def test_stochastic_values_parallel_matches_serial():
    rng = np.random.default_rng(4)
    inst, scen = random_instance(rng, scenarios=4)
    a = stochastic_values(inst, scen, workers=1)
    b = stochastic_values(inst, scen, workers=2)
    assert (a.eev, a.ss, a.ws) == (b.eev, b.ss, b.ws)


def test_report_row_formats_thousands(tmp_path):
    rep = StochasticValueReport(eev=44900.0, ss=43690.0, ws=14690.0, cvar_ss=31250.0, alpha=0.75,
                                n_trains=3, n_scenarios=3)
    row = report_row(rep)
    assert row == {"Trains": "3", "Scen": "3", "EEV": "44.90", "SS": "43.69", "WS": "14.69", "VSS": "1.21",
                   "EVPI": "29.00", "VSS(%)": "2.8", "CVaR_SS": "31.25"}
    path = tmp_path / "sv.csv"
    write_stochastic_values_csv(path, [rep])
    assert path.read_text().splitlines()[0] == "Trains,Scen,EEV,SS,WS,VSS,EVPI,VSS(%),CVaR_SS"


def test_unavailable_metrics_leave_blank_cells():
    rep = StochasticValueReport(eev=math.nan, ss=100.0, ws=50.0, cvar_ss=120.0, alpha=0.75, n_trains=1,
                                n_scenarios=2, unavailable={"EEV": "time limit"})
    row = report_row(rep)
    assert row["EEV"] == "" and row["VSS"] == "" and row["EVPI"] == "0.05"
