import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.optimize import linprog

from helpers import highs_optimum, random_instance
from intermodal.model import RiskParams, build_milp
from intermodal.solver import SolverConfig, check_solution, relative_gap, solve_dense, solve_lp, solve_milp
from intermodal.solver import kernels
from intermodal.solver.kernels import AT_LOWER, AT_UPPER, BASIC, FIXED, FREE
from intermodal.solver.presolve import presolve


def _random_lp(rng, m, n):
    A = rng.integers(-5, 6, (m, n)).astype(float)
    x0 = rng.uniform(0, 3, n)
    sense = rng.choice([-1, 0, 1], m, p=[0.6, 0.15, 0.25])
    act = A @ x0
    b = np.where(sense < 0, act + rng.uniform(0, 2, m), np.where(sense > 0, act - rng.uniform(0, 2, m), act))
    lb = np.where(rng.random(n) < 0.2, -np.inf, 0.0)
    ub = np.where(rng.random(n) < 0.5, np.inf, 5.0)
    c = rng.normal(size=n)
    return A, b, sense, c, lb, ub


def _scipy_lp(A, b, sense, c, lb, ub):
    le, ge, eq = sense < 0, sense > 0, sense == 0
    res = linprog(c, A_ub=np.vstack([A[le], -A[ge]]), b_ub=np.concatenate([b[le], -b[ge]]),
                  A_eq=A[eq] if eq.any() else None, b_eq=b[eq] if eq.any() else None,
                  bounds=list(zip(lb, ub)), method="highs")
    return res


def test_lp_matches_highs_on_random_problems():
    rng = np.random.default_rng(3)
    for _ in range(60):
        m, n = int(rng.integers(2, 12)), int(rng.integers(2, 14))
        A, b, sense, c, lb, ub = _random_lp(rng, m, n)
        ref = _scipy_lp(A, b, sense, c, lb, ub)
        ours = solve_dense(A, b, sense, c, lb, ub)
        if ref.status == 3:
            assert ours.status == "unbounded"
            continue
        assert ref.status == 0
        assert ours.status == "optimal"
        assert ours.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)


def test_lp_infeasible_and_unbounded():
    A = np.array([[1.0, 1.0]])
    assert solve_dense(A, [5.0], [1], [1.0, 1.0], [0, 0], [1, 1]).status == "infeasible"
    assert solve_dense(A, [1.0], [1], [-1.0, 0.0], [0, 0], [np.inf, np.inf]).status == "unbounded"


def test_lp_relaxation_bounds_milp_from_below():
    from intermodal.io import load
    inst, scen = load("tiny")
    model = build_milp(inst, scen, RiskParams(0.0, 0.5))
    assert solve_lp(model).objective <= solve_milp(model).objective + 1e-9


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_milp_matches_highs_on_random_instances(lam):
    rng = np.random.default_rng(int(lam * 10) + 5)
    for _ in range(12):
        inst, scen = random_instance(rng)
        model = build_milp(inst, scen, RiskParams(lam, 0.75))
        res = solve_milp(model)
        assert res.status == "optimal"
        assert check_solution(model, res.x) == []
        ref = highs_optimum(model)
        assert res.objective == pytest.approx(ref, rel=2e-6, abs=1e-6)
        assert res.gap <= SolverConfig().gap


def test_milp_on_unlinked_model_matches_linked():
    rng = np.random.default_rng(17)
    for _ in range(5):
        inst, scen = random_instance(rng)
        a = solve_milp(build_milp(inst, scen, RiskParams(0.3, 0.5)))
        b = solve_milp(build_milp(inst, scen, RiskParams(0.3, 0.5), linking=False))
        assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)


class _Toy:
    """Minimal model object for hand-written MILPs."""

    def __init__(self, A, rhs, sense, c, lb, ub, integer):
        import scipy.sparse as sp
        self.A = sp.csr_matrix(np.asarray(A, dtype=float))
        self.rhs = np.asarray(rhs, dtype=float)
        self.sense = np.asarray(sense)
        self.c = np.asarray(c, dtype=float)
        self.lb = np.asarray(lb, dtype=float)
        self.ub = np.asarray(ub, dtype=float)
        self.integer = np.asarray(integer, dtype=bool)
        self.obj_const = 0.0
        self.row_names = [f"r{k}" for k in range(len(rhs))]
        self.meta = {}

    @property
    def n_vars(self):
        return len(self.c)

    @property
    def n_rows(self):
        return len(self.rhs)


def test_integer_infeasible_milp():
    # 2x = 3 has no integer solution
    toy = _Toy([[2.0]], [3.0], [0], [1.0], [0], [5], [True])
    res = solve_milp(toy)
    assert res.status == "infeasible" and res.x is None


def test_unbounded_milp():
    toy = _Toy([[1.0, -1.0]], [0.0], [-1], [-1.0, 0.0], [0, 0], [np.inf, np.inf], [True, False])
    assert solve_milp(toy).status == "unbounded"


def _knapsack(n=30, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.integers(10, 60, n).astype(float)
    v = w + rng.integers(-5, 6, n)
    return _Toy([w], [w.sum() / 2 + 0.5], [-1], -v, np.zeros(n), np.ones(n), np.ones(n, bool))


def test_node_limit_reports_incumbent_and_gap():
    res = solve_milp(_knapsack(), SolverConfig(node_limit=3))
    assert res.status in ("node-limit", "optimal")
    if res.status == "node-limit":
        assert res.nodes == 3
        assert res.bound <= res.objective
        assert res.gap == pytest.approx(relative_gap(res.objective, res.bound))


def test_time_limit_status():
    res = solve_milp(_knapsack(40, 1), SolverConfig(time_limit=1e-6))
    assert res.status in ("time-limit", "optimal")
    assert math.isfinite(res.bound) or res.x is None


def test_bound_history_is_monotone():
    res = solve_milp(_knapsack(25, 2))
    h = res.bound_history
    assert all(b >= a - 1e-9 for a, b in zip(h, h[1:]))


def test_gap_tolerance_is_honoured():
    res = solve_milp(_knapsack(25, 3), SolverConfig(gap=1e-2))
    assert res.status == "optimal" and res.gap <= 1e-2


def test_solver_config_rejects_unknown_rule():
    with pytest.raises(ValueError):
        SolverConfig(branching="pseudo-cost")


def test_certificate_detects_each_kind():
    toy = _Toy([[1.0, 1.0]], [1.0], [-1], [0, 0], [0, 0], [1, 1], [True, False])
    bad = check_solution(toy, np.array([0.5, 1.0]))
    kinds = {v.kind for v in bad}
    assert kinds == {"row", "integrality"}
    assert check_solution(toy, np.array([0.0, 2.0]))[0].kind in ("row", "bound")
    assert check_solution(toy, np.array([1.0, 0.0])) == []


def test_presolve_fixes_unlocked_columns_and_absorbs_singletons():
    # column 1 costs nothing and only relaxes a <= row, so it sits at its lower bound;
    # both rows then mention column 0 alone and become its bounds
    A = np.array([[1.0, 1.0], [1.0, 0.0]])
    red = presolve(A, np.array([4.0, 1.0]), np.array([-1, 1]), np.array([1.0, 0.0]), np.zeros(2),
                   np.array([10.0, 10.0]), np.array([True, True]), 0.0)
    assert list(red.cols) == [0]
    assert red.fixed[1] == 0.0
    assert red.rows.size == 0
    assert (red.lb[0], red.ub[0]) == (1.0, 4.0)
    assert list(red.expand(np.array([2.0]))) == [2.0, 0.0]


# ------------------------------------------------------------------ kernels


needs_numba = pytest.mark.skipif(kernels.numba_kernels is None, reason="numba unavailable")


@needs_numba
def test_kernels_agree_between_backends():
    rng = np.random.default_rng(0)
    np_price, np_ratio, np_dual, np_update = kernels.numpy_kernels
    nb_price, nb_ratio, nb_dual, nb_update = kernels.numba_kernels
    for _ in range(300):
        n = int(rng.integers(3, 40))
        d = rng.normal(size=n)
        status = rng.choice([BASIC, AT_LOWER, AT_UPPER, FREE, FIXED], n).astype(np.int64)
        for bland in (False, True):
            assert np_price(d, status, 1e-9, bland) == nb_price(d, status, 1e-9, bland)
        m = int(rng.integers(2, 15))
        alpha = rng.normal(size=m) * (rng.random(m) < 0.7)
        lbb = np.where(rng.random(m) < 0.2, -np.inf, 0.0)
        ubb = np.where(rng.random(m) < 0.4, np.inf, rng.uniform(1, 5, m))
        xb = np.clip(rng.uniform(0, 5, m), lbb, ubb)
        basis = rng.permutation(200)[:m].astype(np.int64)
        for dirn in (1.0, -1.0):
            for bland in (False, True):
                flip = float(rng.choice([np.inf, 2.0]))
                a = np_ratio(alpha, xb, lbb, ubb, dirn, flip, 1e-9, 1e-9, bland, basis)
                b = nb_ratio(alpha, xb, lbb, ubb, dirn, flip, 1e-9, 1e-9, bland, basis)
                assert a[0] == b[0] and a[1] == pytest.approx(b[1]) and a[2] == b[2]
        row = rng.normal(size=n)
        for raise_leaving in (False, True):
            assert np_dual(row, d, status, raise_leaving, 1e-9, 1e-9) == \
                nb_dual(row, d, status, raise_leaving, 1e-9, 1e-9)
        binv = rng.normal(size=(m, m))
        alpha = rng.normal(size=m) + 2.0
        r = int(rng.integers(0, m))
        x1, x2 = binv.copy(), binv.copy()
        np_update(x1, alpha, r)
        nb_update(x2, alpha, r)
        assert np.allclose(x1, x2, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("1", "numba")])
def test_backend_flag_selects_kernels(flag, expected):
    env = dict(os.environ, PLANNER_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from intermodal.solver import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_backends_give_identical_optimum():
    code = ("from intermodal.io import load; from intermodal.pipeline import solve_instance;"
            "from intermodal.model import RiskParams;"
            "o = solve_instance(*load('medium'), RiskParams(0.5, 0.5)); print(repr(o.objective))")
    vals = set()
    for flag in ("0", "1"):
        env = dict(os.environ, PLANNER_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.add(float(out.stdout.strip()))
    assert len(vals) == 1
