"""Gomory fractional cuts read off the simplex tableau.

A tableau row is rewritten over shifted nonbasic variables ``t >= 0`` (``x``
or ``1 - x`` for structurals, the row surplus for logicals).  Integer ``t``
contribute their fractional coefficient; surpluses of rows with non-integer
data (earlier Gomory rows) are continuous and get the usual mixed-integer
treatment.  The cut is then mapped back to structural columns, so it only
involves family variables and stays valid at every node of the tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ip_model import GE, IpModel, LinearConstraint
from .lp import LpSolution, TableauRow, tableau_row

FRAC_TOL = 1e-6
COEF_TOL = 1e-9
MAX_DYNAMISM = 1e8


@dataclass
class GomoryCut:
    row: LinearConstraint
    source_basic: int


def _frac(v: float) -> float:
    return v - math.floor(v)


def gomory_cut_from_row(solution: LpSolution, model: IpModel, column: int,
                        violation_tol: float = 1e-4) -> GomoryCut | None:
    return cut_from_tableau_row(tableau_row(solution, column), solution.values, model, violation_tol)


def cut_from_tableau_row(tr: TableauRow, x: np.ndarray, model: IpModel,
                         violation_tol: float = 1e-4) -> GomoryCut | None:
    """Fractional cut from one tableau row; nonbasic columns with ``x > 0.5`` are taken at their upper bound."""
    column = tr.basic
    x = np.asarray(x, dtype=float)
    # value of the basic variable once nonbasics sit at their bounds (slacks at 0)
    f0 = _frac(tr.rhs - sum(a for j, a in tr.coefs.items() if x[j] > 0.5))
    if min(f0, 1.0 - f0) <= FRAC_TOL:
        return None

    g = np.zeros(model.num_columns)
    const = 0.0  # cut is  g.x + const >= f0

    def add_term(coef: float, integral: bool, lin: np.ndarray | None, col: int | None, offset: float, sign: float):
        # t = sign * (lin.x or x[col]) + offset  with t >= 0
        nonlocal const
        if integral:
            w = _frac(coef)
            if w < COEF_TOL:
                return
        elif coef > 0:
            w = coef
        else:
            w = -coef * f0 / (1.0 - f0)
        if col is not None:
            g[col] += w * sign
        else:
            g[:] += w * sign * lin
        const += w * offset

    for j, a in tr.coefs.items():
        if x[j] > 0.5:  # nonbasic at 1: t = 1 - x
            add_term(-a, True, None, j, 1.0, -1.0)
        else:
            add_term(a, True, None, j, 0.0, 1.0)
    for i, a in tr.slack_coefs.items():
        row = model.rows[i]
        lin = np.zeros(model.num_columns)
        for j, c in row.terms.items():
            lin[j] = c
        integral = row.is_integral
        if row.sense == GE:  # s = a.x - b >= 0
            add_term(a, integral, lin, None, -row.rhs, 1.0)
        else:  # s = a.x - b <= 0, t = -s
            add_term(-a, integral, lin, None, row.rhs, -1.0)

    g[np.abs(g) < COEF_TOL] = 0.0
    rhs = f0 - const
    nz = np.abs(g[g != 0.0])
    if nz.size == 0 or nz.max() / nz.min() > MAX_DYNAMISM:
        return None
    cut = LinearConstraint({int(j): float(g[j]) for j in np.flatnonzero(g)}, GE, float(rhs), ("gomory", column))
    if cut.violation(x) <= violation_tol:
        return None
    return GomoryCut(cut, column)


def cut_key(row: LinearConstraint) -> tuple:
    return tuple(sorted((j, round(a, 9)) for j, a in row.terms.items())), round(row.rhs, 9)


def gomory_cuts(solution: LpSolution, model: IpModel, max_cuts: int = 10,
                violation_tol: float = 1e-4, known: set | None = None) -> list[GomoryCut]:
    """Fractional cuts from the most fractional basic family variables.

    ``known`` holds keys of cuts already in the model; it is updated in place.
    Without it the keys are rebuilt from ``model.rows`` on every call.
    """
    cols = solution.basic_columns.tolist()
    frac = [(min(_frac(solution.values[j]), 1 - _frac(solution.values[j])), j) for j in cols]
    frac = sorted((f, j) for f, j in frac if f > FRAC_TOL)
    # different tableau rows often yield the same cut
    seen = known if known is not None else {cut_key(r) for r in model.rows if r.origin[0] == "gomory"}
    cuts = []
    for _, j in sorted(frac, key=lambda t: (-t[0], t[1])):
        cut = gomory_cut_from_row(solution, model, j, violation_tol)
        key = None if cut is None else cut_key(cut.row)
        if key is not None and key not in seen:
            seen.add(key)
            cuts.append(cut)
            if len(cuts) >= max_cuts:
                break
    return cuts
