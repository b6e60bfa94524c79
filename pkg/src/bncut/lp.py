"""Bounded-variable simplex engine for the LP relaxation.

Every model row ``a.x (sense) b`` gets a logical variable ``r = a.x`` whose
bounds encode the sense, so the constraint matrix is ``[A | -I]`` with a zero
right-hand side.  Structural columns are boxed (``[0, 1]`` or a fixing), which
makes any basis dual feasible once nonbasic structurals sit at the bound that
matches the sign of their reduced cost.  The engine therefore solves with the
dual simplex, both from scratch (slack basis) and after row additions or bound
changes, and finishes with primal simplex iterations if a logical ends up dual
infeasible.

Most cut rows are slack, so most logicals are basic.  With ``S`` the basic
structurals and ``R`` the rows whose logical is nonbasic (``|S| == |R|``), the
basis is block triangular and every solve reduces to the kernel
``K = A[R, S]``, which is LU-factored afresh at each iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from .ip_model import EQ, GE, LE, IpModel, LinearConstraint

log = logging.getLogger(__name__)

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2

FEAS_TOL = 1e-6
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9


class LpError(RuntimeError):
    """Numerical failure of the simplex engine (distinct from infeasibility)."""


class SingularBasis(LpError):
    pass


@dataclass
class LpSolution:
    values: np.ndarray
    objective: float
    status: str
    col_status: np.ndarray
    row_status: np.ndarray
    slacks: np.ndarray
    iterations: int = 0
    _engine: "LpEngine | None" = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def basic_columns(self) -> np.ndarray:
        return np.flatnonzero(self.col_status == BASIC)


@dataclass
class TableauRow:
    """``x[basic] + sum(coefs[j] * x[j]) + sum(slack_coefs[i] * s[i]) = rhs``.

    ``s[i]`` is the surplus of row ``i`` (activity minus right-hand side);
    equality-row slacks are identically zero and omitted.
    """

    basic: int
    coefs: dict[int, float]
    slack_coefs: dict[int, float]
    rhs: float


def _normalise_fixings(fixings: Mapping | None) -> dict[int, tuple[float, float]]:
    out = {}
    for j, v in (fixings or {}).items():
        lo, hi = (v, v) if np.isscalar(v) else v
        if lo not in (0, 1) or hi not in (0, 1) or lo > hi:
            raise ValueError(f"bad fixing {v!r} for column {j}")
        out[int(j)] = (float(lo), float(hi))
    return out


class _Kernel:
    """LU factors of ``A[R, S]`` for one basis, plus the block solves built on them."""

    def __init__(self, A: sp.csr_matrix, S: np.ndarray, R: np.ndarray):
        self.S, self.R = S, R
        self.A_R = A[R]
        self.k = len(S)
        if self.k:
            K = self.A_R[:, S].toarray()
            try:
                with np.errstate(all="ignore"):
                    self.lu = lu_factor(K, check_finite=True)
            except (LinAlgError, ValueError) as e:
                raise SingularBasis("singular basis kernel") from e
            if np.min(np.abs(np.diag(self.lu[0]))) < 1e-11:
                raise SingularBasis("near-singular basis kernel")

    def solve(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, b) if self.k else np.zeros(0)

    def solve_t(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, b, trans=1) if self.k else np.zeros(0)


class LpEngine:
    def __init__(self, model: IpModel, feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL,
                 pivot_tol: float = PIVOT_TOL, stall_limit: int = 1000, max_iter: int = 200_000):
        if model.num_columns < 1:
            raise ValueError("model has no columns")
        self.model = model
        self.feas_tol, self.opt_tol, self.pivot_tol = feas_tol, opt_tol, pivot_tol
        self.stall_limit, self.max_iter = stall_limit, max_iter
        self.N = model.num_columns
        self.cost_s = -np.asarray(model.objective, dtype=float)
        self.m = 0
        self._rows_data: list[tuple[np.ndarray, np.ndarray]] = []
        self.A = sp.csr_matrix((0, self.N))
        self.lb = np.zeros(self.N)
        self.ub = np.ones(self.N)
        self.row_rhs = np.zeros(0)
        self.row_eq = np.zeros(0, dtype=bool)
        self.status = np.full(self.N, AT_LOWER, dtype=np.int8)
        self.fixings: dict[int, tuple[float, float]] = {}
        self.total_iterations = 0
        self.num_solves = 0
        self.sync_rows()

    # ------------------------------------------------------------ structure

    def sync_rows(self) -> int:
        """Pull rows appended to the model since the last call; their logicals start basic."""
        new = self.model.rows[self.m:]
        if not new:
            return 0
        k = len(new)
        lo, hi, rhs, eq = [], [], [], []
        for row in new:
            cols = np.fromiter(row.terms.keys(), dtype=np.int64, count=len(row.terms))
            vals = np.fromiter(row.terms.values(), dtype=float, count=len(row.terms))
            self._rows_data.append((cols, vals))
            rhs.append(row.rhs)
            eq.append(row.sense == EQ)
            lo.append(row.rhs if row.sense in (GE, EQ) else -np.inf)
            hi.append(row.rhs if row.sense in (LE, EQ) else np.inf)
        indptr = np.zeros(len(self._rows_data) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(c) for c, _ in self._rows_data])
        indices = np.concatenate([c for c, _ in self._rows_data]) if indptr[-1] else np.zeros(0, dtype=np.int64)
        data = np.concatenate([v for _, v in self._rows_data]) if indptr[-1] else np.zeros(0)
        self.m += k
        self.A = sp.csr_matrix((data, indices, indptr), shape=(self.m, self.N))
        self.lb = np.concatenate([self.lb, lo])
        self.ub = np.concatenate([self.ub, hi])
        self.row_rhs = np.concatenate([self.row_rhs, rhs])
        self.row_eq = np.concatenate([self.row_eq, eq])
        self.status = np.concatenate([self.status, np.full(k, BASIC, dtype=np.int8)])
        return k

    def set_fixings(self, fixings: Mapping | None) -> None:
        fix = _normalise_fixings(fixings)
        self.lb[: self.N] = 0.0
        self.ub[: self.N] = 1.0
        for j, (lo, hi) in fix.items():
            self.lb[j], self.ub[j] = lo, hi
        self.fixings = fix

    def get_basis(self) -> np.ndarray:
        return self.status.copy()

    def set_basis(self, saved: np.ndarray) -> None:
        """Restore a saved basis; logicals of rows added since then are made basic."""
        extra = self.N + self.m - len(saved)
        self.status = np.concatenate([saved, np.full(extra, BASIC, dtype=np.int8)])

    # ------------------------------------------------------------ evaluation

    def _kernel(self, status: np.ndarray | None = None) -> _Kernel:
        st = self.status if status is None else status
        m = len(st) - self.N
        S = np.flatnonzero(st[: self.N] == BASIC)
        R = np.flatnonzero(st[self.N:] != BASIC)
        if len(S) != len(R):
            raise LpError(f"inconsistent basis: {len(S)} basic columns for {len(R)} tight rows")
        A = self.A if m == self.m else self.A[:m]
        return _Kernel(A, S, R)

    def _values(self, ker: _Kernel) -> np.ndarray:
        """Values of all structural and logical variables for the current basis."""
        x = np.where(self.status == AT_UPPER, self.ub, self.lb)
        xs = x[: self.N].copy()
        xs[ker.S] = 0.0
        if ker.k:
            xs[ker.S] = ker.solve(x[self.N + ker.R] - ker.A_R @ xs)
        x[: self.N] = xs
        basic_rows = self.status[self.N:] == BASIC
        x[self.N:][basic_rows] = (self.A @ xs)[basic_rows]
        return x

    def _reduced_costs(self, ker: _Kernel) -> np.ndarray:
        d = np.zeros(self.N + self.m)
        y = ker.solve_t(self.cost_s[ker.S])
        d[: self.N] = self.cost_s - ker.A_R.T @ y
        d[self.N + ker.R] = y
        d[self.status == BASIC] = 0.0
        return d

    def _row_of_inverse(self, ker: _Kernel, leaving: int) -> np.ndarray:
        """Row of B^-1 N for the basic variable ``leaving`` over all variables."""
        alpha = np.zeros(self.N + self.m)
        if leaving < self.N:
            t = int(np.searchsorted(ker.S, leaving))
            e = np.zeros(ker.k)
            e[t] = 1.0
            rho = ker.solve_t(e)
            alpha[: self.N] = ker.A_R.T @ rho
        else:
            i = leaving - self.N
            a_iS = self.A[i, ker.S].toarray().ravel() if ker.k else np.zeros(0)
            rho = ker.solve_t(a_iS)
            alpha[: self.N] = ker.A_R.T @ rho - self.A[i].toarray().ravel()
        alpha[self.N + ker.R] = -rho
        alpha[self.status == BASIC] = 0.0
        return alpha

    def _column_direction(self, ker: _Kernel, q: int) -> np.ndarray:
        """B^-1 a_q scattered onto all variables (zero for nonbasic ones)."""
        out = np.zeros(self.N + self.m)
        if q < self.N:
            top = ker.solve(ker.A_R[:, q].toarray().ravel()) if ker.k else np.zeros(0)
            a_q = self.A[:, q].toarray().ravel()
        else:
            e = np.zeros(ker.k)
            e[int(np.searchsorted(ker.R, q - self.N))] = -1.0
            top = ker.solve(e)
            a_q = np.zeros(self.m)
        xs = np.zeros(self.N)
        xs[ker.S] = top
        out[ker.S] = top
        basic_rows = np.flatnonzero(self.status[self.N:] == BASIC)
        out[self.N + basic_rows] = (self.A @ xs)[basic_rows] - a_q[basic_rows]
        return out

    def _place_boxed(self, d: np.ndarray) -> None:
        """Move boxed nonbasic variables to the bound their reduced cost asks for."""
        boxed = np.isfinite(self.lb) & np.isfinite(self.ub) & (self.status != BASIC)
        to_up = boxed & (self.status == AT_LOWER) & (d < -self.opt_tol) & (self.ub > self.lb)
        to_lo = boxed & (self.status == AT_UPPER) & (d > self.opt_tol)
        self.status[to_up] = AT_UPPER
        self.status[to_lo] = AT_LOWER

    # ------------------------------------------------------------ algorithms

    def _dual_simplex(self) -> str:
        stall = 0
        it = 0
        while True:
            if it > self.max_iter:
                raise LpError("iteration limit reached in dual simplex")
            ker = self._kernel()
            d = self._reduced_costs(ker)
            self._place_boxed(d)
            x = self._values(ker)
            basic = np.flatnonzero(self.status == BASIC)
            xb = x[basic]
            below = self.lb[basic] - xb
            above = xb - self.ub[basic]
            infeas = np.maximum(below, above)
            if infeas.max(initial=0.0) <= self.feas_tol:
                return "optimal"
            bland = stall >= self.stall_limit
            cand_rows = np.flatnonzero(infeas > self.feas_tol)
            p = int(cand_rows[0] if bland else cand_rows[np.argmax(infeas[cand_rows])])
            leaving = int(basic[p])
            s = 1.0 if below[p] > self.feas_tol else -1.0
            alpha = self._row_of_inverse(ker, leaving)
            sa = s * alpha
            movable = (self.status != BASIC) & (self.ub > self.lb)
            cand = movable & (((self.status == AT_LOWER) & (sa < -self.pivot_tol))
                              | ((self.status == AT_UPPER) & (sa > self.pivot_tol)))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return "infeasible"
            # dual slack of each candidate; wrong-signed ones (within opt_tol) count as zero
            slack = np.maximum(np.where(self.status[idx] == AT_LOWER, d[idx], -d[idx]), 0.0)
            absa = np.abs(alpha[idx])
            ratios = slack / absa
            ties = np.flatnonzero(ratios <= ratios.min() + 1e-12)
            # among tied ratios: lowest index under Bland, else the largest pivot
            k = int(ties[0]) if bland else int(ties[np.argmax(absa[ties])])
            q = int(idx[k])
            self.status[q] = BASIC
            self.status[leaving] = AT_LOWER if s > 0 else AT_UPPER
            # dual objective gain of this pivot
            gain = ratios[k] * infeas[p]
            stall = stall + 1 if gain <= 1e-9 * (1.0 + abs(float(self.cost_s @ x[: self.N]))) else 0
            it += 1
            self.total_iterations += 1

    def _primal_simplex(self) -> None:
        stall = 0
        it = 0
        while True:
            if it > self.max_iter:
                raise LpError("iteration limit reached in primal simplex")
            ker = self._kernel()
            d = self._reduced_costs(ker)
            movable = (self.status != BASIC) & (self.ub > self.lb)
            up = movable & (self.status == AT_LOWER) & (d < -self.opt_tol)
            down = movable & (self.status == AT_UPPER) & (d > self.opt_tol)
            idx = np.flatnonzero(up | down)
            if idx.size == 0:
                return
            bland = stall >= self.stall_limit
            q = int(idx.min()) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            dirn = 1.0 if up[q] else -1.0
            x = self._values(ker)
            dx = -self._column_direction(ker, q) * dirn
            basic = np.flatnonzero(self.status == BASIC)
            xb, dxb = x[basic], dx[basic]
            lbb, ubb = self.lb[basic], self.ub[basic]
            with np.errstate(divide="ignore", invalid="ignore"):
                r_dec = np.where(dxb < -self.pivot_tol, (xb - lbb) / -dxb, np.inf)
                r_inc = np.where(dxb > self.pivot_tol, (ubb - xb) / dxb, np.inf)
            ratios = np.maximum(np.minimum(r_dec, r_inc), 0.0)
            flip = self.ub[q] - self.lb[q]
            t = ratios.min(initial=np.inf)
            if not np.isfinite(t) and not np.isfinite(flip):
                raise LpError("primal simplex found an unbounded ray")
            if flip <= t:
                self.status[q] = AT_UPPER if dirn > 0 else AT_LOWER
                stall = 0
            else:
                if bland:
                    p = int(np.flatnonzero(ratios <= t + 1e-12)[0])
                else:
                    # Harris two-pass ratio test: allow feas_tol slack, then take the largest pivot
                    with np.errstate(divide="ignore", invalid="ignore"):
                        relaxed = np.minimum(np.where(dxb < -self.pivot_tol, (xb - lbb + self.feas_tol) / -dxb, np.inf),
                                             np.where(dxb > self.pivot_tol, (ubb - xb + self.feas_tol) / dxb, np.inf))
                    ok = np.flatnonzero(ratios <= relaxed.min())
                    p = int(ok[np.argmax(np.abs(dxb[ok]))])
                leaving = int(basic[p])
                self.status[q] = BASIC
                self.status[leaving] = AT_UPPER if dxb[p] > 0 else AT_LOWER
                stall = stall + 1 if ratios[p] <= 1e-12 else 0
            it += 1
            self.total_iterations += 1

    def solve(self) -> LpSolution:
        self.sync_rows()
        start = self.total_iterations
        self.num_solves += 1
        try:
            status = self._run()
        except SingularBasis:
            # from-scratch fallback: the slack basis is always factorable and dual feasible
            log.warning("singular basis kernel; re-solving from the slack basis")
            self.status[: self.N] = AT_LOWER
            self.status[self.N:] = BASIC
            status = self._run()
        return self._solution(status, self.total_iterations - start)

    def _run(self) -> str:
        status = self._dual_simplex()
        if status == "optimal":
            d = self._reduced_costs(self._kernel())
            bad = (self.status != BASIC) & (self.ub > self.lb) & (
                ((self.status == AT_LOWER) & (d < -self.opt_tol))
                | ((self.status == AT_UPPER) & (d > self.opt_tol)))
            if bad.any():
                self._primal_simplex()
                status = self._dual_simplex()
        return status

    def _solution(self, status: str, iterations: int) -> LpSolution:
        x = self._values(self._kernel())
        xs = np.clip(x[: self.N], self.lb[: self.N], self.ub[: self.N])
        slacks = x[self.N:] - self.row_rhs
        obj = float(self.model.objective @ xs) if status == "optimal" else -np.inf
        return LpSolution(xs, obj, status, self.status[: self.N].copy(), self.status[self.N:].copy(),
                          slacks, iterations, self)

    # ------------------------------------------------------------ tableau

    def tableau_row(self, solution: LpSolution, column: int) -> TableauRow:
        if solution.col_status[column] != BASIC:
            raise ValueError(f"column {column} is not basic")
        status = np.concatenate([solution.col_status, solution.row_status])
        m = len(solution.row_status)
        ker = self._kernel(status)
        t = int(np.searchsorted(ker.S, column))
        e = np.zeros(ker.k)
        e[t] = 1.0
        rho = ker.solve_t(e)
        alpha_s = ker.A_R.T @ rho
        alpha_s[ker.S] = 0.0
        coefs = {int(j): float(alpha_s[j]) for j in np.flatnonzero(alpha_s)}
        slack_coefs = {}
        rhs = 0.0
        for i, a in zip(ker.R.tolist(), (-rho).tolist()):
            if a == 0.0 or i >= m:
                continue
            # logical r_i = s_i + b_i
            rhs -= a * self.row_rhs[i]
            if not self.row_eq[i]:
                slack_coefs[i] = a
        return TableauRow(int(column), coefs, slack_coefs, float(rhs))


def solve_relaxation(model: IpModel, fixings: Mapping | None = None,
                     engine: LpEngine | None = None) -> LpSolution:
    engine = engine or LpEngine(model)
    engine.set_fixings(fixings)
    return engine.solve()


def add_rows_and_resolve(model: IpModel, new_rows: list[LinearConstraint],
                         previous: LpSolution) -> LpSolution:
    for row in new_rows:
        model.add_row(row)
    engine = previous._engine or LpEngine(model)
    return engine.solve()


def tableau_row(solution: LpSolution, column: int) -> TableauRow:
    return solution._engine.tableau_row(solution, column)
