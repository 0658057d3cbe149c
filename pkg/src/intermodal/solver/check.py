"""Independent feasibility certificate for a candidate solution vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-6


@dataclass(frozen=True)
class SolutionViolation:
    kind: str  # row | bound | integrality
    name: str
    slack: float  # negative by the amount of the violation

    def __str__(self) -> str:
        return f"{self.kind} {self.name}: slack {self.slack:.6g}"


def check_solution(model, v, tol: float = TOL) -> list[SolutionViolation]:
    """List every row, bound and integrality violation beyond ``tol``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (model.n_vars,):
        raise ValueError(f"vector length {v.shape} != {model.n_vars}")
    out: list[SolutionViolation] = []
    act = model.A @ v
    for r in range(model.n_rows):
        s = int(model.sense[r])
        if s < 0:
            slack = model.rhs[r] - act[r]
        elif s > 0:
            slack = act[r] - model.rhs[r]
        else:
            slack = -abs(act[r] - model.rhs[r])
        if slack < -tol:
            out.append(SolutionViolation("row", model.row_names[r], float(slack)))
    names = _col_names(model)
    for k in np.flatnonzero(v < model.lb - tol):
        out.append(SolutionViolation("bound", names(k), float(v[k] - model.lb[k])))
    for k in np.flatnonzero(v > model.ub + tol):
        out.append(SolutionViolation("bound", names(k), float(model.ub[k] - v[k])))
    ints = np.flatnonzero(model.integer)
    frac = np.abs(v[ints] - np.round(v[ints]))
    for k in ints[frac > tol]:
        out.append(SolutionViolation("integrality", names(k), -float(abs(v[k] - np.round(v[k])))))
    return out


def _col_names(model):
    layout = getattr(model, "layout", None)
    if layout is None:
        return lambda k: f"v{k}"
    return lambda k: "{}{}".format(*layout.describe(int(k)))
