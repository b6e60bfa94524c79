"""Branch-and-cut over family variables."""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gomory import cut_key, gomory_cuts
from .ip_model import (INT_TOL, Digraph, IpModel, LinearConstraint, cluster_row,
                       extract_digraph, is_acyclic)
from .lp import LpEngine, LpSolution
from .scores import LocalScoreTable
from .separation import find_cluster_cuts

log = logging.getLogger(__name__)


@dataclass
class SolverParams:
    gap_rel: float = 1e-6
    time_limit: float | None = None
    node_limit: int | None = None
    subip_time_limit: float | None = None
    max_cluster_cuts: int | None = 2000
    cuts_per_round: int | None = 200
    k2_cuts: bool = True
    gomory: bool = True
    gomory_max_cuts: int = 10
    # stop Gomory at a node after this many consecutive rounds gaining < gomory_min_gain (relative)
    gomory_stall_rounds: int = 10
    gomory_min_gain: float = 1e-6
    heuristics: bool = True
    random_orders: int = 100
    seed: int = 0
    stall_rounds: int = 50
    violation_tol: float = 1e-4
    warm_start_basis: bool = True


@dataclass
class Incumbent:
    digraph: Digraph
    score: float


@dataclass
class SolveStats:
    nodes: int = 0
    cluster_cuts: int = 0
    k2_cuts: int = 0
    gomory_cuts: int = 0
    gomory_rounds: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    separation_rounds: int = 0
    separation_truncated: int = 0
    rows: int = 0
    wall_time: float = 0.0
    limit_reached: bool = False
    root_bounds: list[float] = field(default_factory=list)
    root_events: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("root_bounds", "root_events")}
        d["root_rounds"] = len(self.root_bounds)
        return d


@dataclass
class SolveResult:
    optimal: Incumbent
    proof_bound: float
    stats: SolveStats
    proven: bool

    @property
    def gap(self) -> float:
        return self.proof_bound - self.optimal.score


@dataclass(order=True)
class SearchNode:
    sort_key: tuple
    fixings: dict[int, int] = field(compare=False)
    parent_bound: float = field(compare=False)
    depth: int = field(compare=False, default=0)
    basis: tuple | None = field(compare=False, default=None, repr=False)


def gap_tol(score: float, rel: float = 1e-6) -> float:
    return rel * (1.0 + abs(score))


# ---------------------------------------------------------------- heuristics

def best_dag_for_order(table: LocalScoreTable, order: Sequence[int]) -> Incumbent:
    """Highest-scoring DAG whose parents all precede their child in ``order``."""
    if sorted(order) != list(range(table.n)):
        raise ValueError("order must be a permutation of the variables")
    pred = 0
    parents: list[tuple[int, ...]] = [()] * table.n
    total = 0.0
    for u in order:
        best_w, best_s = None, -np.inf
        for w, s in table.entries[u]:
            if s > best_s and all(pred >> p & 1 for p in w):
                best_w, best_s = w, s
        if best_w is None:
            raise ValueError(f"no candidate parent set of {table.names[u]} fits the order")
        parents[u] = best_w
        total += best_s
        pred |= 1 << u
    return Incumbent(Digraph(tuple(parents)), float(total))


def random_order_incumbent(table: LocalScoreTable, orders: int, seed: int = 0) -> Incumbent | None:
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(orders):
        inc = best_dag_for_order(table, rng.permutation(table.n).tolist())
        if best is None or inc.score > best.score:
            best = inc
    return best


def _is_integral(x: np.ndarray) -> bool:
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= INT_TOL))


def try_rounding_incumbent(x: Sequence[float], model: IpModel,
                           incumbent: Incumbent | None) -> Incumbent | None:
    """Integral acyclic ``x`` as is, else the per-variable argmax rounding, if it beats ``incumbent``."""
    x = np.asarray(x, dtype=float)
    if _is_integral(x):
        g = extract_digraph(model, x)
    else:
        g = Digraph(tuple(model.columns[max(cols, key=lambda j: (x[j], -j))].parents
                          for cols in model.by_child))
    if not is_acyclic(g):
        return None
    score = float(sum(model.columns[model.column_of(u, w)].objective_coeff
                      for u, w in enumerate(g.parents)))
    if incumbent is not None and score <= incumbent.score:
        return None
    return Incumbent(g, score)


# ---------------------------------------------------------------- branching

def select_branching_column(x: np.ndarray, model: IpModel) -> int:
    frac = np.minimum(x, 1.0 - x)
    cand = np.flatnonzero(frac > INT_TOL)
    if cand.size == 0:
        raise ValueError("no fractional column to branch on")
    return int(min(cand, key=lambda j: (-round(frac[j], 12), -abs(model.objective[j]), j)))


def branch(node: SearchNode, x: np.ndarray, model: IpModel, bound: float,
           basis: tuple | None = None, counter=None) -> tuple[SearchNode, SearchNode]:
    j = select_branching_column(np.asarray(x, dtype=float), model)
    counter = counter or itertools.count()
    zero = dict(node.fixings)
    zero[j] = 0
    one = dict(node.fixings)
    for k in model.by_child[model.columns[j].child]:
        one[k] = 0
    one[j] = 1
    mk = lambda fx: SearchNode((-bound, next(counter)), fx, bound, node.depth + 1, basis)
    return mk(zero), mk(one)


# ---------------------------------------------------------------- main loop

class BranchAndCut:
    def __init__(self, model: IpModel, params: SolverParams | None = None):
        self.model = model
        self.params = params or SolverParams()
        self.engine = LpEngine(model)
        self.stats = SolveStats()
        self.incumbent: Incumbent | None = None
        self.pruned_bound = -np.inf
        self._counter = itertools.count()
        self._start = 0.0
        self._gomory_keys = {cut_key(r) for r in model.rows if r.origin[0] == "gomory"}

    def _tol(self) -> float:
        return gap_tol(self.incumbent.score if self.incumbent else 0.0, self.params.gap_rel)

    def _dominated(self, bound: float) -> bool:
        return self.incumbent is not None and bound <= self.incumbent.score + self._tol()

    def _offer(self, inc: Incumbent | None, source: str) -> None:
        if inc is not None and (self.incumbent is None or inc.score > self.incumbent.score):
            self.incumbent = inc
            log.info("incumbent %.6f from %s", inc.score, source)

    def _out_of_budget(self) -> bool:
        p = self.params
        if p.time_limit is not None and time.perf_counter() - self._start > p.time_limit:
            return True
        return p.node_limit is not None and self.stats.nodes >= p.node_limit

    def _add_rows(self, rows: list[LinearConstraint]) -> int:
        return sum(1 for r in rows if self.model.add_row(r))

    def _separate(self, sol: LpSolution) -> int:
        p = self.params
        res = find_cluster_cuts(sol.values, self.model, time_limit=p.subip_time_limit,
                                max_cuts=p.max_cluster_cuts, violation_tol=p.violation_tol)
        self.stats.separation_rounds += 1
        self.stats.separation_truncated += int(res.truncated)
        found = res.cuts
        if p.cuts_per_round is not None:
            # keep the most efficacious ones; the rest are found again later if still violated
            found = sorted(found, key=lambda c: (-c.efficacy, c.cluster))[: p.cuts_per_round]
        added = self._add_rows([cluster_row(self.model, c.cluster, 1) for c in found])
        self.stats.cluster_cuts += added
        if p.k2_cuts:
            k2 = self._add_rows([cluster_row(self.model, c.cluster, 2) for c in found if len(c.cluster) >= 3])
            self.stats.k2_cuts += k2
            added += k2
        return added

    def _process(self, node: SearchNode, root: bool) -> list[SearchNode]:
        p = self.params
        self.engine.set_fixings(node.fixings)
        if p.warm_start_basis and node.basis is not None:
            self.engine.set_basis(node.basis)
        last_bound = np.inf
        stall = weak_gomory = 0
        after_gomory = False
        while True:
            sol = self.engine.solve()
            self.stats.lp_solves += 1
            if not sol.optimal:
                return []
            bound = sol.objective
            x = sol.values
            if root:
                self.stats.root_bounds.append(bound)
            if self._dominated(bound):
                self.pruned_bound = max(self.pruned_bound, bound)
                return []
            if p.heuristics:
                self._offer(try_rounding_incumbent(x, self.model, self.incumbent), "rounding")
            if _is_integral(x):
                g = extract_digraph(self.model, x)
                if is_acyclic(g):
                    self._offer(Incumbent(g, bound), "lp")
                    self.pruned_bound = max(self.pruned_bound, bound)
                    return []
            gain = last_bound - bound
            stall = stall + 1 if gain < 1e-9 * (1.0 + abs(bound)) else 0
            if after_gomory:
                weak_gomory = weak_gomory + 1 if gain < p.gomory_min_gain * (1.0 + abs(bound)) else 0
            last_bound = bound
            if (stall >= p.stall_rounds or self._out_of_budget()) and not _is_integral(x):
                if root:
                    self.stats.root_events.append("stall-branch")
                break
            after_gomory = False
            if self._separate(sol):
                if root:
                    self.stats.root_events.append("cluster")
                continue
            if p.gomory and weak_gomory < p.gomory_stall_rounds:
                cuts = gomory_cuts(sol, self.model, p.gomory_max_cuts, p.violation_tol, self._gomory_keys)
                n_added = self._add_rows([c.row for c in cuts])
                if n_added:
                    self.stats.gomory_cuts += n_added
                    self.stats.gomory_rounds += 1
                    after_gomory = True
                    if root:
                        self.stats.root_events.append("gomory")
                    continue
            if root:
                self.stats.root_events.append("branch")
            break
        if _is_integral(x):
            raise RuntimeError("integral cyclic LP solution left without a separating cut")
        basis = self.engine.get_basis() if p.warm_start_basis else None
        return list(branch(node, x, self.model, bound, basis, self._counter))

    def solve(self) -> SolveResult:
        p = self.params
        self._start = time.perf_counter()
        table = self.model.table()
        if p.heuristics and p.random_orders > 0:
            self._offer(random_order_incumbent(table, p.random_orders, p.seed), "random orders")
        open_nodes = [SearchNode((np.inf, next(self._counter)), {}, np.inf, 0)]
        root = True
        while open_nodes:
            if self._out_of_budget():
                self.stats.limit_reached = True
                break
            node = heapq.heappop(open_nodes)
            if self._dominated(node.parent_bound):
                self.pruned_bound = max(self.pruned_bound, node.parent_bound)
                continue
            self.stats.nodes += 1
            for child in self._process(node, root):
                heapq.heappush(open_nodes, child)
            root = False
            if self.stats.nodes % 50 == 0:
                top = -open_nodes[0].sort_key[0] if open_nodes else self.pruned_bound
                log.info("nodes %d open %d bound %.6f incumbent %s rows %d", self.stats.nodes,
                         len(open_nodes), top, self.incumbent and round(self.incumbent.score, 6),
                         len(self.model.rows))
        open_bound = max((n.parent_bound for n in open_nodes), default=-np.inf)
        if self.incumbent is None:
            # only possible under limits before any feasible point was seen
            self._offer(random_order_incumbent(table, 1, p.seed), "fallback order")
        proof = max(self.pruned_bound, open_bound, self.incumbent.score)
        st = self.stats
        st.rows = len(self.model.rows)
        st.lp_iterations = self.engine.total_iterations
        st.wall_time = time.perf_counter() - self._start
        proven = not open_nodes and proof - self.incumbent.score <= self._tol()
        return SolveResult(self.incumbent, proof, st, proven)


def solve(model: IpModel, params: SolverParams | None = None) -> SolveResult:
    return BranchAndCut(model, params).solve()
