"""Best-bound branch-and-bound over the simplex relaxation.

Fractional integer columns that can be rounded without touching any row
(no lock in that direction) and without raising the objective are rounded
rather than branched on; for the route-activation binaries this removes the
whole z block from the search.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import AT_LOWER, AT_UPPER
from .lp import LpSolution, Simplex, solve_dense
from .presolve import locks, presolve, shrink_fixed

log = logging.getLogger(__name__)

INT_TOL = 1e-6
DIVE_EVERY = 100  # nodes between heuristic dives


@dataclass
class SolverConfig:
    gap: float = 1e-6
    time_limit: float | None = None
    node_limit: int | None = None
    feas_tol: float = 1e-7
    branching: str = "most-fractional"
    seed: int = 0
    node_log: Callable[[tuple], None] | None = None

    def __post_init__(self):
        if self.gap <= 0 or self.feas_tol <= 0:
            raise ValueError("solver tolerances must be positive")
        if self.branching != "most-fractional":
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class MipResult:
    status: str  # optimal | gap-limit | time-limit | node-limit | infeasible | unbounded
    x: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes: int
    wall_time: float
    lp_iterations: int = 0
    bound_history: list[float] = field(default_factory=list)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    return max(0.0, (incumbent - bound) / max(1.0, abs(incumbent)))


class _Search:
    def __init__(self, model, cfg: SolverConfig):
        self.model = model
        self.cfg = cfg
        A = model.A.toarray() if hasattr(model.A, "toarray") else np.asarray(model.A, dtype=float)
        self.A_full = A
        self.c_full = np.asarray(model.c, dtype=float)
        lb = np.asarray(model.lb, dtype=float).copy()
        ub = np.asarray(model.ub, dtype=float).copy()
        ints = np.asarray(model.integer, dtype=bool)
        lb[ints] = np.ceil(lb[ints] - INT_TOL)
        ub[ints] = np.floor(ub[ints] + INT_TOL)
        self.full_lb, self.full_ub = lb, ub
        red = presolve(A, np.asarray(model.rhs, dtype=float), np.asarray(model.sense), self.c_full, lb, ub, ints,
                       model.obj_const)
        self.red = red
        self.c = red.c
        self.integer = red.integer
        up_lock, down_lock = locks(red.A, red.sense)
        self.free_down = self.integer & ~down_lock & (self.c >= 0)
        self.free_up = self.integer & ~up_lock & (self.c <= 0)
        self.cont = np.flatnonzero(~self.integer)
        self.cont_rows = np.flatnonzero(np.abs(red.A[:, self.cont]).sum(axis=1) > 0) if self.cont.size else \
            np.zeros(0, dtype=np.int64)
        self.position = np.full(A.shape[1], -1, dtype=np.int64)
        self.position[red.cols] = np.arange(red.cols.size)
        self.sx = Simplex(red.A, red.rhs, red.sense, red.c, red.obj_const, feas_tol=cfg.feas_tol)
        self.incumbent: np.ndarray | None = None
        self.inc_obj = math.inf

    @property
    def lp_iterations(self) -> int:
        return self.sx.iterations

    def lp(self, lb, ub, start=None):
        if np.any(lb > ub + INT_TOL):
            return LpSolution("infeasible", None, np.nan, 0)
        return self.sx.warm(lb, ub, start)

    def cutoff(self) -> float:
        if self.incumbent is None:
            return math.inf
        return self.inc_obj - self.cfg.gap * max(1.0, abs(self.inc_obj))

    # ------------------------------------------------------------ rounding

    def classify(self, x):
        """Return (fractional columns, branchable columns)."""
        ints = np.flatnonzero(self.integer)
        frac = ints[np.abs(x[ints] - np.round(x[ints])) > INT_TOL]
        branchable = frac[~(self.free_down[frac] | self.free_up[frac])]
        return frac, branchable

    def round_free(self, x, frac, lb, ub):
        v = x.copy()
        for k in frac:
            if self.free_down[k] and math.floor(v[k]) >= lb[k] - INT_TOL:
                v[k] = math.floor(v[k])
            elif self.free_up[k] and math.ceil(v[k]) <= ub[k] + INT_TOL:
                v[k] = math.ceil(v[k])
            else:
                return None
        v[self.integer] = np.round(v[self.integer])
        return v

    def polish(self, v):
        """Re-solve the continuous columns with every integer column fixed."""
        red = self.red
        if self.cont.size:
            ints = np.flatnonzero(self.integer)
            fixed = red.A[:, ints] @ v[ints]
            other = np.setdiff1d(np.arange(red.A.shape[0]), self.cont_rows)
            act, rhs, sense = fixed[other], red.rhs[other], red.sense[other]
            tol = 1e-6
            bad = ((sense < 0) & (act > rhs + tol)) | ((sense > 0) & (act < rhs - tol)) | \
                ((sense == 0) & (np.abs(act - rhs) > tol))
            if bad.any():
                return None
            rows = self.cont_rows
            sol = solve_dense(red.A[np.ix_(rows, self.cont)], red.rhs[rows] - fixed[rows], red.sense[rows],
                              self.c[self.cont], red.lb[self.cont], red.ub[self.cont], feas_tol=self.cfg.feas_tol)
            if sol.status != "optimal":
                return None
            v = v.copy()
            v[self.cont] = sol.x
        m = self.model
        full = red.expand(v)
        return shrink_fixed(full, red, self.A_full, np.asarray(m.rhs, dtype=float), np.asarray(m.sense),
                            self.full_lb, np.asarray(m.integer, dtype=bool))

    def offer(self, v) -> bool:
        v = self.polish(v)
        if v is None:
            return False
        obj = float(self.c_full @ v + self.model.obj_const)
        if obj < self.inc_obj - 1e-12 * max(1.0, abs(obj)):
            self.incumbent, self.inc_obj = v, obj
            log.debug("new incumbent %.10g", obj)
            return True
        return False

    def dive(self, x, lb, ub, start, max_depth: int | None = None) -> None:
        """Fractional diving: fix the least fractional branchable column, re-solve, repeat."""
        lb, ub = lb.copy(), ub.copy()
        max_depth = max_depth or 4 * int(self.integer.sum()) + 10
        for _ in range(max_depth):
            frac, branchable = self.classify(x)
            if branchable.size == 0:
                v = self.round_free(x, frac, lb, ub)
                if v is not None:
                    self.offer(v)
                return
            f = x[branchable] - np.floor(x[branchable])
            dist = np.minimum(f, 1.0 - f)
            k = int(branchable[np.argmin(dist)])
            near = float(np.round(x[k]))
            other = math.floor(x[k]) if near > x[k] else math.ceil(x[k])
            for val in (near, other):
                lb2, ub2 = lb.copy(), ub.copy()
                lb2[k] = ub2[k] = val
                sol = self.lp(lb2, ub2, start)
                if sol.status == "optimal" and sol.objective < self.cutoff():
                    lb, ub, x = lb2, ub2, sol.x
                    start = self.sx.snapshot()
                    break
            else:
                return

    def reduced_cost_fix(self, objective, lb, ub) -> tuple[np.ndarray, np.ndarray]:
        """Tighten integer bounds that would push the LP past the incumbent."""
        if self.incumbent is None:
            return lb, ub
        room = self.cutoff() - objective
        if room <= 0:
            return lb, ub
        sx = self.sx
        n = sx.n
        d = sx.reduced_costs(sx.cost)[:n]
        st = sx.status[:n]
        tol = 1e-9 * max(1.0, abs(objective))
        lo = self.integer & (st == AT_LOWER) & (d > tol) & np.isfinite(ub)
        hi = self.integer & (st == AT_UPPER) & (d < -tol) & np.isfinite(lb)
        if not (lo.any() or hi.any()):
            return lb, ub
        lb, ub = lb.copy(), ub.copy()
        ub[lo] = np.minimum(ub[lo], lb[lo] + np.floor(room / d[lo] + INT_TOL))
        lb[hi] = np.maximum(lb[hi], ub[hi] - np.floor(room / -d[hi] + INT_TOL))
        return lb, ub

    def round_and_repair(self, x, lb, ub, start) -> None:
        """Fix each heuristic group at the rounded-up LP value, re-solve, round what is left."""
        groups = getattr(self.model, "meta", {}).get("round_repair", [])
        lb2, ub2 = lb.copy(), ub.copy()
        for grp in groups:
            cols = self.position[np.arange(grp.start, grp.stop)]
            cols = cols[cols >= 0]
            if cols.size == 0:
                continue
            vals = np.clip(np.ceil(x[cols] - INT_TOL), lb[cols], ub[cols])
            lb2[cols] = vals
            ub2[cols] = vals
            sol = self.lp(lb2, ub2, start)
            if sol.status != "optimal":
                return
            x = sol.x
            start = self.sx.snapshot()
            frac, branchable = self.classify(x)
            if branchable.size == 0:
                v = self.round_free(x, frac, lb2, ub2)
                if v is not None:
                    self.offer(v)
                return


def solve_milp(model, cfg: SolverConfig | None = None) -> MipResult:
    """Minimise ``model`` to proven optimality (or the configured limits)."""
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    s = _Search(model, cfg)
    lb0 = s.red.lb.copy()
    ub0 = s.red.ub.copy()

    heap: list = []
    plunge: list = []
    seq = 0
    nodes = 0
    history: list[float] = []
    plunging = True
    global_bound = -math.inf
    status = None

    def open_bound(current: float) -> float:
        b = [current]
        if heap:
            b.append(heap[0][0])
        b.extend(n[0] for n in plunge)
        return min(b)

    def push(bound, lb, ub, basis, preferred: bool):
        nonlocal seq
        seq += 1
        item = (bound, seq, lb, ub, basis)
        if plunging and preferred:
            plunge.append(item)
        else:
            heapq.heappush(heap, item)

    heapq.heappush(heap, (-math.inf, 0, lb0, ub0, None))
    root = True
    while heap or plunge:
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            status = "time-limit"
            break
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            status = "node-limit"
            break
        if plunge:
            bound, _, lb, ub, basis = plunge.pop()
        else:
            # keep diving depth-first until something feasible is known
            plunging = s.incumbent is None
            bound, _, lb, ub, basis = heapq.heappop(heap)
        if bound >= s.cutoff():
            continue
        nodes += 1
        sol = s.lp(lb, ub, basis)
        if sol.status == "unbounded" and root:
            return MipResult("unbounded", None, -math.inf, -math.inf, math.inf, nodes,
                             time.perf_counter() - start, s.lp_iterations, history)
        if sol.status not in ("optimal", "infeasible"):
            log.warning("node LP ended with status %s; node dropped", sol.status)
        node_bound = max(bound, sol.objective) if sol.status == "optimal" else math.inf
        new_incumbent = False
        if sol.status == "optimal" and node_bound < s.cutoff():
            x = sol.x
            here = s.sx.snapshot()
            lb, ub = s.reduced_cost_fix(sol.objective, lb, ub)
            frac, branchable = s.classify(x)
            if branchable.size == 0:
                v = s.round_free(x, frac, lb, ub)
                if v is not None:
                    new_incumbent = s.offer(v)
                else:
                    branchable = frac
            if root and branchable.size:
                before = s.inc_obj
                s.round_and_repair(x, lb, ub, here)
                if s.incumbent is None:
                    s.dive(x, lb, ub, here)
                new_incumbent = new_incumbent or s.inc_obj < before
            elif branchable.size and nodes % DIVE_EVERY == 0:
                before = s.inc_obj
                s.dive(x, lb, ub, here)
                new_incumbent = new_incumbent or s.inc_obj < before
            if branchable.size and node_bound < s.cutoff():
                f = x[branchable] - np.floor(x[branchable])
                score = np.minimum(f, 1.0 - f)
                k = int(branchable[np.argmax(score)])  # argmax keeps the lowest index on ties
                down_ub = ub.copy()
                down_ub[k] = math.floor(x[k])
                up_lb = lb.copy()
                up_lb[k] = math.ceil(x[k])
                down_first = (x[k] - math.floor(x[k])) < 0.5
                # the preferred child is pushed last so the plunge pops it next
                if down_first:
                    push(node_bound, up_lb, ub, here, preferred=False)
                    push(node_bound, lb, down_ub, here, preferred=True)
                else:
                    push(node_bound, lb, down_ub, here, preferred=False)
                    push(node_bound, up_lb, ub, here, preferred=True)
        root = False
        if new_incumbent:
            plunging = True
        global_bound = max(global_bound, open_bound(s.inc_obj))
        history.append(global_bound)
        if cfg.node_log is not None:
            cfg.node_log((nodes, global_bound, s.inc_obj, relative_gap(s.inc_obj, global_bound),
                          time.perf_counter() - start))
        if s.incumbent is not None and relative_gap(s.inc_obj, global_bound) <= cfg.gap:
            status = "optimal"
            break

    wall = time.perf_counter() - start
    if s.incumbent is None:
        if status is None:
            status = "infeasible"
        bound = math.inf if status == "infeasible" else global_bound
        return MipResult(status, None, math.inf, bound, math.inf, nodes, wall, s.lp_iterations, history)
    if status is None:
        # tree exhausted: every open node was pruned against the incumbent
        status = "optimal"
        global_bound = max(global_bound, s.inc_obj - cfg.gap * max(1.0, abs(s.inc_obj)))
    global_bound = min(global_bound, s.inc_obj)
    if history:
        history[-1] = max(history[-1], global_bound) if status == "optimal" else history[-1]
    return MipResult(status, s.incumbent, s.inc_obj, global_bound, relative_gap(s.inc_obj, global_bound), nodes,
                     wall, s.lp_iterations, history)
