"""Hot simplex kernels: pricing, primal and dual ratio tests, basis-inverse update.

Two implementations share one contract: numba ``@njit`` loops and a
vectorised numpy path. ``PLANNER_NUMBA=0`` (or a missing numba) selects the
numpy path at import time; both are importable for side-by-side testing.

Nonbasic status codes: BASIC 0, AT_LOWER 1, AT_UPPER 2, FREE 3 (sitting at 0),
FIXED 4 (never enters).
"""

from __future__ import annotations

import os

import numpy as np

BASIC, AT_LOWER, AT_UPPER, FREE, FIXED = 0, 1, 2, 3, 4


# ------------------------------------------------------------------ numpy


def _np_price(d, status, tol, bland):
    score = np.where(status == AT_LOWER, -d, np.where(status == AT_UPPER, d,
                     np.where(status == FREE, np.abs(d), -np.inf)))
    cand = np.flatnonzero(score > tol)
    if cand.size == 0:
        return -1
    if bland:
        return int(cand[0])
    return int(cand[np.argmax(score[cand])])


def _np_ratio(alpha, xb, lbb, ubb, dirn, flip_range, piv_tol, harris_tol, bland, basis):
    a = dirn * alpha
    down = a > piv_tol
    up = a < -piv_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.full(a.shape, np.inf)
        t[down] = (xb[down] - lbb[down]) / a[down]
        t[up] = (ubb[up] - xb[up]) / (-a[up])
    t = np.maximum(t, 0.0)
    finite = np.isfinite(t)
    if not finite.any():
        if np.isfinite(flip_range):
            return -1, flip_range, False
        return -1, np.inf, False
    if bland:
        tmin = t[finite].min()
        if flip_range <= tmin:
            return -1, flip_range, False
        ties = np.flatnonzero(finite & (t <= tmin + 1e-12))
        r = int(ties[np.argmin(basis[ties])])
        return r, float(t[r]), bool(up[r])
    with np.errstate(divide="ignore", invalid="ignore"):
        relaxed = np.full(a.shape, np.inf)
        relaxed[down] = (xb[down] - lbb[down] + harris_tol) / a[down]
        relaxed[up] = (ubb[up] - xb[up] + harris_tol) / (-a[up])
    tmax = max(relaxed.min(), 0.0)
    if flip_range <= tmax:
        return -1, flip_range, False
    cand = np.flatnonzero(finite & (t <= tmax))
    r = int(cand[np.argmax(np.abs(a[cand]))])
    return r, float(t[r]), bool(up[r])


def _np_dual_ratio(alpha_row, d, status, raise_leaving, piv_tol, harris_tol):
    """Entering column for a dual pivot; -1 when the primal problem is infeasible.

    ``raise_leaving`` is True when the leaving basic variable sits below its
    lower bound and must increase.
    """
    a = alpha_row if raise_leaving else -alpha_row
    ok = ((status == AT_LOWER) & (a < -piv_tol)) | ((status == AT_UPPER) & (a > piv_tol)) | \
        ((status == FREE) & (np.abs(a) > piv_tol))
    cand = np.flatnonzero(ok)
    if cand.size == 0:
        return -1
    absa = np.abs(a[cand])
    dd = np.abs(d[cand])
    tmax = ((dd + harris_tol) / absa).min()
    inside = cand[dd / absa <= tmax]
    return int(inside[np.argmax(np.abs(a[inside]))])


def _np_update(binv, alpha, r):
    row = binv[r] / alpha[r]
    binv -= np.outer(alpha, row)
    binv[r] = row


# ------------------------------------------------------------------ numba


def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True)
    def price(d, status, tol, bland):
        best = -1
        best_score = tol
        for j in range(d.shape[0]):
            s = status[j]
            if s == 1:
                score = -d[j]
            elif s == 2:
                score = d[j]
            elif s == 3:
                score = abs(d[j])
            else:
                continue
            if score > best_score:
                if bland:
                    return j
                best = j
                best_score = score
        return best

    @njit(cache=True, nogil=True)
    def ratio(alpha, xb, lbb, ubb, dirn, flip_range, piv_tol, harris_tol, bland, basis):
        m = alpha.shape[0]
        if bland:
            best = -1
            tbest = np.inf
            to_upper = False
            for i in range(m):
                a = dirn * alpha[i]
                if a > piv_tol:
                    ti = (xb[i] - lbb[i]) / a
                    u = False
                elif a < -piv_tol:
                    ti = (ubb[i] - xb[i]) / (-a)
                    u = True
                else:
                    continue
                if not np.isfinite(ti):
                    continue
                if ti < 0.0:
                    ti = 0.0
                if ti < tbest - 1e-12 or (ti <= tbest + 1e-12 and best >= 0 and basis[i] < basis[best]):
                    best = i
                    tbest = ti
                    to_upper = u
            if flip_range <= tbest:
                return -1, flip_range, False
            return best, tbest, to_upper
        tmax = np.inf
        for i in range(m):
            a = dirn * alpha[i]
            if a > piv_tol:
                ti = (xb[i] - lbb[i] + harris_tol) / a
            elif a < -piv_tol:
                ti = (ubb[i] - xb[i] + harris_tol) / (-a)
            else:
                continue
            if ti < tmax:
                tmax = ti
        if tmax < 0.0:
            tmax = 0.0
        if flip_range <= tmax:
            return -1, flip_range, False
        if not np.isfinite(tmax):
            return -1, np.inf, False
        best = -1
        best_a = 0.0
        tbest = np.inf
        to_upper = False
        for i in range(m):
            a = dirn * alpha[i]
            if a > piv_tol:
                ti = (xb[i] - lbb[i]) / a
                u = False
            elif a < -piv_tol:
                ti = (ubb[i] - xb[i]) / (-a)
                u = True
            else:
                continue
            if ti < 0.0:
                ti = 0.0
            if ti <= tmax and abs(a) > best_a:
                best = i
                best_a = abs(a)
                tbest = ti
                to_upper = u
        return best, tbest, to_upper

    @njit(cache=True, nogil=True)
    def dual_ratio(alpha_row, d, status, raise_leaving, piv_tol, harris_tol):
        sgn = 1.0 if raise_leaving else -1.0
        tmax = np.inf
        for j in range(d.shape[0]):
            a = sgn * alpha_row[j]
            s = status[j]
            if (s == 1 and a < -piv_tol) or (s == 2 and a > piv_tol) or (s == 3 and abs(a) > piv_tol):
                t = (abs(d[j]) + harris_tol) / abs(a)
                if t < tmax:
                    tmax = t
        if not np.isfinite(tmax):
            return -1
        best = -1
        best_a = 0.0
        for j in range(d.shape[0]):
            a = sgn * alpha_row[j]
            s = status[j]
            if (s == 1 and a < -piv_tol) or (s == 2 and a > piv_tol) or (s == 3 and abs(a) > piv_tol):
                if abs(d[j]) / abs(a) <= tmax and abs(a) > best_a:
                    best = j
                    best_a = abs(a)
        return best

    @njit(cache=True, nogil=True)
    def update(binv, alpha, r):
        m = binv.shape[0]
        piv = alpha[r]
        for k in range(m):
            binv[r, k] /= piv
        for i in range(m):
            if i == r:
                continue
            f = alpha[i]
            if f == 0.0:
                continue
            for k in range(m):
                binv[i, k] -= f * binv[r, k]

    return price, ratio, dual_ratio, update


numpy_kernels = (_np_price, _np_ratio, _np_dual_ratio, _np_update)

try:
    numba_kernels = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_kernels = None


def _select():
    flag = os.environ.get("PLANNER_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off") or numba_kernels is None:
        return "numpy", numpy_kernels
    return "numba", numba_kernels


BACKEND, (price, ratio_test, dual_ratio_test, update_inverse) = _select()
