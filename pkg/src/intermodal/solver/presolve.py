"""Bound tightening ahead of branch-and-bound.

Two rules only. A column whose objective coefficient never rewards moving it
off a bound, and which no row blocks from moving to that bound, is fixed there
(dual fixing). Rows left with a single column afterwards turn into bounds on
that column. For the planning model this removes the activation binaries
together with their linking rows, since a binary at 1 makes ``x <= M z`` a
plain bound on x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TOL = 1e-9


@dataclass
class Reduced:
    A: np.ndarray  # dense, kept rows x kept columns
    rhs: np.ndarray
    sense: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    obj_const: float
    cols: np.ndarray  # kept original column indices
    rows: np.ndarray  # kept original row indices
    fixed: np.ndarray  # full-length values for removed columns (nan where kept)
    shrinkable: np.ndarray  # removed columns that may be lowered back after solving

    def expand(self, v: np.ndarray) -> np.ndarray:
        out = self.fixed.copy()
        out[self.cols] = v
        return out


def locks(A: np.ndarray, sense: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per column: (some row blocks increasing it, some row blocks decreasing it)."""
    pos, neg = A > 0, A < 0
    le, ge, eq = (sense < 0)[:, None], (sense > 0)[:, None], (sense == 0)[:, None]
    any_nz = pos | neg
    up = ((pos & le) | (neg & ge) | (any_nz & eq)).any(axis=0)
    down = ((neg & le) | (pos & ge) | (any_nz & eq)).any(axis=0)
    return up, down


def presolve(A, rhs, sense, c, lb, ub, integer, obj_const: float = 0.0) -> Reduced:
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    up_lock, down_lock = locks(A, sense)
    fixed = np.full(n, np.nan)
    shrink = np.zeros(n, dtype=bool)
    to_lb = (c >= 0) & ~down_lock & np.isfinite(lb)
    to_ub = (c <= 0) & ~up_lock & np.isfinite(ub) & ~to_lb
    fixed[to_lb] = lb[to_lb]
    fixed[to_ub] = ub[to_ub]
    shrink[to_ub & (c == 0)] = True
    same = (lb == ub)
    fixed[same] = lb[same]

    keep_c = np.isnan(fixed)
    cols = np.flatnonzero(keep_c)
    fixed_vals = np.where(keep_c, 0.0, fixed)
    r_rhs = rhs - A @ fixed_vals
    Ak = A[:, cols]
    lb_k, ub_k = lb[cols].copy(), ub[cols].copy()
    int_k = integer[cols]

    # rows left with a single column become bounds on it; empty rows are checked and dropped
    nnz = (Ak != 0).sum(axis=1)
    drop = np.zeros(m, dtype=bool)
    for r in np.flatnonzero(nnz <= 1):
        scale = max(1.0, abs(r_rhs[r]))
        if nnz[r] == 0:
            s = sense[r]
            ok = (s < 0 and r_rhs[r] >= -TOL * scale) or (s > 0 and r_rhs[r] <= TOL * scale) or \
                (s == 0 and abs(r_rhs[r]) <= TOL * scale)
            drop[r] = ok
            continue
        j = int(np.flatnonzero(Ak[r])[0])
        a = Ak[r, j]
        v = r_rhs[r] / a
        upper = (sense[r] < 0) == (a > 0) or sense[r] == 0
        lower = (sense[r] > 0) == (a > 0) or sense[r] == 0
        new_lb, new_ub = lb_k[j], ub_k[j]
        if upper:
            new_ub = min(new_ub, math.floor(v + 1e-9) if int_k[j] else v)
        if lower:
            new_lb = max(new_lb, math.ceil(v - 1e-9) if int_k[j] else v)
        if new_lb > new_ub + TOL:
            continue  # leave the row in place so the LP reports infeasibility
        lb_k[j], ub_k[j] = new_lb, max(new_lb, new_ub)
        drop[r] = True
    rows = np.flatnonzero(~drop)
    const = obj_const + float(c @ fixed_vals)
    return Reduced(A=np.ascontiguousarray(Ak[rows]), rhs=r_rhs[rows], sense=np.asarray(sense)[rows],
                   c=c[cols], lb=lb_k, ub=ub_k, integer=int_k, obj_const=const, cols=cols, rows=rows,
                   fixed=np.where(keep_c, np.nan, fixed), shrinkable=np.flatnonzero(shrink))


def shrink_fixed(v: np.ndarray, red: Reduced, A: np.ndarray, rhs: np.ndarray, sense: np.ndarray,
                 lb: np.ndarray, integer: np.ndarray) -> np.ndarray:
    """Lower zero-cost columns that were parked at their upper bound as far as every row allows.

    Such columns only relax ``<=`` rows (or tighten nothing), so the smallest
    admissible value is set by the tightest of those rows.
    """
    v = v.copy()
    for j in red.shrinkable:
        col = A[:, j]
        nz = np.flatnonzero(col)
        need = lb[j]
        for r in nz:
            a = col[r]
            rest = float(A[r] @ v - a * v[j])
            if sense[r] < 0 and a < 0:
                need = max(need, (rest - rhs[r]) / -a)
            elif sense[r] > 0 and a > 0:
                need = max(need, (rhs[r] - rest) / a)
        if integer[j]:
            need = math.ceil(need - 1e-9)
        v[j] = min(v[j], max(need, lb[j]))
    return v
