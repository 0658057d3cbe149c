"""Bounded-variable revised simplex with a dense basis inverse.

Rows are equilibrated, then every row gets a slack whose bounds encode its
sense plus an artificial column used only by the cold-start crash basis.

* Cold solve: two-phase primal simplex. Dantzig pricing with a Harris ratio
  test, switching to Bland's rule after a run of degenerate pivots.
* Warm solve: after bound changes, the previous optimal basis stays dual
  feasible, so a dual simplex pass restores primal feasibility. This is what
  branch-and-bound nodes use; any trouble falls back to a cold solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalBreakdown
from . import kernels
from .kernels import AT_LOWER, AT_UPPER, BASIC, FIXED, FREE

log = logging.getLogger(__name__)

REFACTOR_EVERY = 64
DEGENERATE_RUN = 50
PIVOT_TOL = 1e-9


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    x: np.ndarray | None
    objective: float
    iterations: int


@dataclass(frozen=True)
class Basis:
    basis: np.ndarray
    status: np.ndarray


class Simplex:
    """Reusable simplex state for one constraint matrix and many bound sets."""

    def __init__(self, A, b, sense, c, obj_const: float = 0.0, feas_tol: float = 1e-7, opt_tol: float = 1e-9,
                 max_iter: int | None = None):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        scale = np.abs(A).max(axis=1) if n else np.ones(m)
        scale[scale == 0] = 1.0
        self.m, self.n = m, n
        self.b = np.asarray(b, dtype=float) / scale
        self.sense = np.asarray(sense, dtype=np.int64)
        self.A = np.hstack([A / scale[:, None], np.eye(m), np.eye(m)])
        self.c = np.asarray(c, dtype=float)
        self.cost = np.concatenate([self.c, np.zeros(2 * m)])
        self.obj_const = obj_const
        self.feas_tol, self.opt_tol = feas_tol, opt_tol
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000
        self.slack = n + np.arange(m)
        self.art = n + m + np.arange(m)
        self.slack_lb = np.where(self.sense > 0, -np.inf, 0.0)
        self.slack_ub = np.where(self.sense < 0, np.inf, 0.0)
        self.iterations = 0
        self.iter_start = 0
        self.basis = np.zeros(0, dtype=np.int64)
        self.binv = None
        self.since_refactor = 0
        self.ready = False  # True once the state holds an optimal basis

    # ------------------------------------------------------------ helpers

    def _set_bounds(self, lb, ub) -> None:
        m = self.m
        self.lb = np.concatenate([lb, self.slack_lb, np.zeros(m)])
        self.ub = np.concatenate([ub, self.slack_ub, np.zeros(m)])

    def _nonbasic_values(self) -> None:
        st = self.status
        x = self.x
        nb = st != BASIC
        x[nb & ((st == AT_LOWER) | (st == FIXED))] = self.lb[nb & ((st == AT_LOWER) | (st == FIXED))]
        x[nb & (st == AT_UPPER)] = self.ub[nb & (st == AT_UPPER)]
        x[nb & (st == FREE)] = 0.0

    def refactor(self) -> None:
        try:
            self.binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis at refactorisation", iterations=self.iterations) from exc
        if not np.all(np.isfinite(self.binv)):
            raise NumericalBreakdown("non-finite basis inverse", iterations=self.iterations)
        self._basic_values()
        self.since_refactor = 0

    def _basic_values(self) -> None:
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.binv @ (self.b - self.A @ xn)

    def reduced_costs(self, cost) -> np.ndarray:
        y = cost[self.basis] @ self.binv
        return cost - y @ self.A

    def primal_infeasibility(self) -> float:
        x = self.x
        return float(np.maximum(self.lb - x, 0).max(initial=0.0) + np.maximum(x - self.ub, 0).max(initial=0.0))

    def snapshot(self) -> Basis:
        return Basis(self.basis.copy(), self.status.copy())

    def _result(self) -> LpSolution:
        n = self.n
        x = np.clip(self.x[:n], self.lb[:n], self.ub[:n])
        return LpSolution("optimal", x, float(self.c @ x + self.obj_const), self.iterations)

    # ------------------------------------------------------------ primal

    def _primal(self, cost, bland: bool = False) -> str:
        degenerate = 0
        harris = self.feas_tol * 1e-2
        while True:
            if self.iterations - self.iter_start >= self.max_iter:
                return "iteration-limit"
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            d = self.reduced_costs(cost)
            q = kernels.price(d, self.status, self.opt_tol, bland)
            if q < 0:
                return "optimal"
            dirn = 1.0 if (self.status[q] != AT_UPPER and d[q] < 0) else -1.0
            alpha = self.binv @ self.A[:, q]
            flip = self.ub[q] - self.lb[q]
            xb = self.x[self.basis]
            r, t, to_upper = kernels.ratio_test(alpha, xb, self.lb[self.basis], self.ub[self.basis], dirn,
                                                flip, PIVOT_TOL, harris, bland, self.basis)
            if r < 0 and not np.isfinite(t):
                return "unbounded"
            self.iterations += 1
            self.x[q] += dirn * t
            self.x[self.basis] = xb - dirn * t * alpha
            if r < 0:
                self.status[q] = AT_UPPER if self.status[q] == AT_LOWER else AT_LOWER
                self.x[q] = self.ub[q] if self.status[q] == AT_UPPER else self.lb[q]
            else:
                self._leave(r, to_upper)
                self.basis[r] = q
                self.status[q] = BASIC
                kernels.update_inverse(self.binv, alpha, r)
                self.since_refactor += 1
            if t <= 1e-12:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN and not bland:
                    log.debug("degenerate run of %d pivots, switching to Bland's rule", degenerate)
                    bland = True
            else:
                degenerate = 0

    def _leave(self, r: int, to_upper: bool) -> None:
        leave = self.basis[r]
        if self.lb[leave] == self.ub[leave]:
            self.status[leave] = FIXED
            self.x[leave] = self.lb[leave]
        elif to_upper:
            self.status[leave] = AT_UPPER
            self.x[leave] = self.ub[leave]
        else:
            self.status[leave] = AT_LOWER
            self.x[leave] = self.lb[leave]

    # ------------------------------------------------------------ dual

    def _dual(self) -> str:
        harris = self.opt_tol
        while True:
            if self.iterations - self.iter_start >= self.max_iter:
                return "iteration-limit"
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            xb = self.x[self.basis]
            lbb, ubb = self.lb[self.basis], self.ub[self.basis]
            below = lbb - xb
            above = xb - ubb
            infeas = np.maximum(np.maximum(below, above), 0.0)
            r = int(np.argmax(infeas)) if infeas.size else 0
            if infeas.size == 0 or infeas[r] <= self.feas_tol:
                return "optimal"
            raise_leaving = below[r] > 0
            d = self.reduced_costs(self.cost)
            alpha_row = self.binv[r] @ self.A
            q = kernels.dual_ratio_test(alpha_row, d, self.status, raise_leaving, PIVOT_TOL, harris)
            if q < 0:
                return "infeasible"
            alpha = self.binv @ self.A[:, q]
            if abs(alpha[r]) < PIVOT_TOL:
                raise NumericalBreakdown("dual pivot element vanished", iterations=self.iterations)
            bound = lbb[r] if raise_leaving else ubb[r]
            delta = (xb[r] - bound) / alpha[r]
            self.iterations += 1
            self.x[q] += delta
            self.x[self.basis] = xb - delta * alpha
            self._leave(r, not raise_leaving)
            self.basis[r] = q
            self.status[q] = BASIC
            kernels.update_inverse(self.binv, alpha, r)
            self.since_refactor += 1

    # ------------------------------------------------------------ drivers

    def cold(self, lb, ub, bland: bool = False) -> LpSolution:
        m, n = self.m, self.n
        self.ready = False
        self.iter_start = self.iterations
        self._set_bounds(lb, ub)
        fin_lb, fin_ub = np.isfinite(lb), np.isfinite(ub)
        x = np.zeros(n + 2 * m)
        x[:n][fin_lb] = lb[fin_lb]
        only_ub = ~fin_lb & fin_ub
        x[:n][only_ub] = ub[only_ub]
        resid = self.b - self.A[:, :n] @ x[:n]
        slack_ok = (resid >= self.slack_lb - self.feas_tol) & (resid <= self.slack_ub + self.feas_tol) & \
            (self.sense != 0)
        sgn = np.where(resid >= 0, 1.0, -1.0)
        self.A[np.arange(m), self.art] = sgn
        self.status = np.empty(n + 2 * m, dtype=np.int64)
        self.status[:n] = np.where(lb == ub, FIXED, np.where(fin_lb, AT_LOWER, np.where(fin_ub, AT_UPPER, FREE)))
        self.status[self.slack] = np.where(self.sense == 0, FIXED, np.where(self.sense < 0, AT_LOWER, AT_UPPER))
        self.status[self.art] = FIXED
        self.basis = np.where(slack_ok, self.slack, self.art).astype(np.int64)
        self.status[self.basis] = BASIC
        self.ub[self.art[~slack_ok]] = np.inf  # artificials in the crash basis may carry residual
        x[self.basis] = np.where(slack_ok, resid, np.abs(resid))
        self.x = x
        self.binv = np.diag(np.where(slack_ok, 1.0, sgn)) if m else np.zeros((0, 0))
        self.since_refactor = 0

        if not slack_ok.all():
            phase1 = np.zeros(n + 2 * m)
            phase1[self.art] = 1.0
            status = self._primal(phase1, bland)
            if status != "optimal":
                return LpSolution(status, None, np.nan, self.iterations)
            self.refactor()
            if float(self.x[self.art].sum()) > self.feas_tol * max(1.0, float(np.abs(self.b).max(initial=0.0))):
                return LpSolution("infeasible", None, np.nan, self.iterations)
        # artificials are pinned at zero from here on
        self.ub[self.art] = 0.0
        basic_art = self.status[self.art] == BASIC
        self.x[self.art[~basic_art]] = 0.0
        self.status[self.art[~basic_art]] = FIXED
        status = self._primal(self.cost, bland)
        if status != "optimal":
            return LpSolution(status, None, np.nan, self.iterations)
        return self._finish()

    def _finish(self) -> LpSolution:
        self.refactor()
        if self.primal_infeasibility() > 1e3 * self.feas_tol:
            raise NumericalBreakdown("basic solution lost feasibility", iterations=self.iterations,
                                     infeasibility=self.primal_infeasibility())
        self.ready = True
        return self._result()

    def warm(self, lb, ub, start: Basis | None) -> LpSolution:
        """Re-optimise from ``start`` (default: the current basis) under new bounds."""
        if start is None and not self.ready:
            return cold_with_retry(self, lb, ub)
        try:
            out = self._warm(lb, ub, start)
            if out is not None:
                return out
        except NumericalBreakdown as exc:
            log.debug("warm start failed (%s), solving cold", exc)
        return cold_with_retry(self, lb, ub)

    def _warm(self, lb, ub, start: Basis | None) -> LpSolution | None:
        n = self.n
        self.iter_start = self.iterations
        if start is not None:
            same = self.ready and np.array_equal(start.basis, self.basis)
            self.basis = start.basis.copy()
            self.status = start.status.copy()
            if not same:
                self.binv = None
        self.ready = False
        self._set_bounds(lb, ub)
        st = self.status[:n]
        nb = st != BASIC
        fixed = nb & (lb == ub)
        st[fixed] = FIXED
        st[nb & ~fixed & (st == FIXED)] = AT_LOWER
        lower_gone = nb & ~fixed & (st == AT_LOWER) & ~np.isfinite(lb)
        st[lower_gone] = np.where(np.isfinite(ub[lower_gone]), AT_UPPER, FREE)
        upper_gone = nb & ~fixed & (st == AT_UPPER) & ~np.isfinite(ub)
        st[upper_gone] = np.where(np.isfinite(lb[upper_gone]), AT_LOWER, FREE)
        self._nonbasic_values()
        if self.binv is None:
            self.refactor()
        else:
            self._basic_values()
        d = self.reduced_costs(self.cost)
        # repair dual feasibility of boxed columns by moving them to the other bound
        wrong_lo = (self.status == AT_LOWER) & (d < -self.opt_tol)
        wrong_up = (self.status == AT_UPPER) & (d > self.opt_tol)
        flip_lo = wrong_lo & np.isfinite(self.ub)
        flip_up = wrong_up & np.isfinite(self.lb)
        if (wrong_lo & ~flip_lo).any() or (wrong_up & ~flip_up).any() or \
                ((self.status == FREE) & (np.abs(d) > self.opt_tol)).any():
            return None
        if flip_lo.any() or flip_up.any():
            self.status[flip_lo] = AT_UPPER
            self.status[flip_up] = AT_LOWER
            self._nonbasic_values()
            self._basic_values()
        status = self._dual()
        if status == "infeasible":
            return LpSolution("infeasible", None, np.nan, self.iterations)
        if status != "optimal":
            return None
        # tidy up any dual infeasibility left by round-off
        status = self._primal(self.cost)
        if status != "optimal":
            return None
        return self._finish()


def solve_lp(model, lb: np.ndarray | None = None, ub: np.ndarray | None = None, feas_tol: float = 1e-7,
             opt_tol: float = 1e-9, max_iter: int | None = None) -> LpSolution:
    """Solve the continuous relaxation of ``model`` (integrality is ignored)."""
    A = model.A.toarray() if hasattr(model.A, "toarray") else np.asarray(model.A, dtype=float)
    return solve_dense(A, model.rhs, model.sense, model.c, model.lb if lb is None else lb,
                       model.ub if ub is None else ub, obj_const=model.obj_const, feas_tol=feas_tol,
                       opt_tol=opt_tol, max_iter=max_iter)


def solve_dense(A, b, sense, c, lb, ub, obj_const: float = 0.0, feas_tol: float = 1e-7, opt_tol: float = 1e-9,
                max_iter: int | None = None) -> LpSolution:
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub + feas_tol):
        return LpSolution("infeasible", None, np.nan, 0)
    sx = Simplex(A, b, sense, c, obj_const, feas_tol, opt_tol, max_iter)
    return cold_with_retry(sx, lb, ub)


def cold_with_retry(sx: Simplex, lb, ub) -> LpSolution:
    """Cold solve; on numerical trouble retry once from scratch under Bland's rule."""
    last_error = None
    for attempt in range(2):
        try:
            return sx.cold(lb, ub, bland=attempt > 0)
        except (NumericalBreakdown, FloatingPointError) as exc:
            last_error = exc
            log.debug("simplex attempt %d failed: %s", attempt, exc)
    raise NumericalBreakdown("simplex failed after refactorisation retries", rows=sx.m, cols=sx.n,
                             cause=str(last_error))
