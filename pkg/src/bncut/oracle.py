"""Independent reference learners used to check the solver."""

from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Sequence

import numpy as np

from .ip_model import Digraph, acyclic_rows
from .scores import Dataset, LocalScoreTable

BRUTE_FORCE_MAX_N = 7
DP_MAX_N = 16


@dataclass
class OracleResult:
    score: float
    digraph: Digraph


def _masks(table: LocalScoreTable):
    return [(np.array([sum(1 << p for p in w) for w, _ in ents], dtype=np.int64),
             np.array([s for _, s in ents]), [w for w, _ in ents]) for ents in table.entries]


def brute_force_optimal(table: LocalScoreTable, chunk: int = 1 << 18) -> OracleResult:
    """Best acyclic choice of one candidate parent set per variable, by full enumeration.

    Assignments are extended one variable at a time over whole arrays of partial
    assignments; a partial assignment is dropped as soon as it closes a cycle.
    No score-based pruning is done.
    """
    n = table.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    per = _masks(table)
    best = [-np.inf, None]

    def extend(u: int, anc: np.ndarray, score: np.ndarray, choice: np.ndarray) -> None:
        if u == n:
            k = int(np.argmax(score))
            if score[k] > best[0]:
                best[0], best[1] = float(score[k]), choice[k].copy()
            return
        pmask, psc, _ = per[u]
        step = max(1, chunk // len(pmask))
        bit = np.int64(1 << u)
        for lo in range(0, len(score), step):
            a = anc[lo: lo + step]
            k, c = a.shape[0], len(pmask)
            a = np.repeat(a, c, axis=0)
            w = np.tile(pmask, k)
            # ancestors of u: its parents and their ancestors
            anc_u = w.copy()
            for p in range(n):
                has = (w >> p) & 1 == 1
                anc_u[has] |= a[has, p]
            ok = (anc_u & bit) == 0
            a, w, anc_u = a[ok], w[ok], anc_u[ok]
            a[:, u] = anc_u
            below = (a & bit) != 0  # vertices that have u as an ancestor
            a |= np.where(below, anc_u[:, None], np.int64(0))
            sc = np.repeat(score[lo: lo + step], c)[ok] + np.tile(psc, k)[ok]
            ch = np.repeat(choice[lo: lo + step], c, axis=0)[ok]
            ch[:, u] = np.tile(np.arange(c), k)[ok]
            if sc.size:
                extend(u + 1, a, sc, ch)

    extend(0, np.zeros((1, n), dtype=np.int64), np.zeros(1), np.zeros((1, n), dtype=np.int64))
    pick = best[1]
    g = Digraph(tuple(per[u][2][pick[u]] for u in range(n)))
    return OracleResult(float(sum(per[u][1][pick[u]] for u in range(n))), g)


def dp_optimal(table: LocalScoreTable) -> OracleResult:
    """Exact optimum by dynamic programming over variable subsets (best sinks)."""
    n = table.n
    if n > DP_MAX_N:
        raise ValueError(f"dynamic programming limited to n <= {DP_MAX_N}")
    full = 1 << n
    # best_ps[u][S]: best candidate parent set of u contained in S
    subsets = np.arange(full, dtype=np.int64)
    lows = [subsets[(subsets >> b) & 1 == 0] for b in range(n)]
    best_ps = np.full((n, full), -np.inf)
    best_arg = np.full((n, full), -1, dtype=np.int64)
    for u, ents in enumerate(table.entries):
        for k, (w, s) in enumerate(ents):
            m = sum(1 << p for p in w)
            if s > best_ps[u, m]:
                best_ps[u, m], best_arg[u, m] = s, k
        for b in range(n):
            lo = lows[b]
            hi = lo | (1 << b)
            better = best_ps[u, lo] > best_ps[u, hi]
            best_ps[u, hi] = np.where(better, best_ps[u, lo], best_ps[u, hi])
            best_arg[u, hi] = np.where(better, best_arg[u, lo], best_arg[u, hi])

    pop = np.zeros(full, dtype=np.int64)
    for b in range(n):
        pop += (subsets >> b) & 1
    best = np.full(full, -np.inf)
    sink = np.full(full, -1, dtype=np.int64)
    best[0] = 0.0
    for size in range(1, n + 1):
        layer = subsets[pop == size]
        for u in range(n):
            has = layer[(layer >> u) & 1 == 1]
            rest = has & ~(1 << u)
            cand = best[rest] + best_ps[u, rest]
            better = cand > best[has]
            best[has[better]] = cand[better]
            sink[has[better]] = u
    parents: list[tuple[int, ...]] = [()] * n
    S = full - 1
    while S:
        u = int(sink[S])
        S &= ~(1 << u)
        parents[u] = table.entries[u][int(best_arg[u, S])][0]
    return OracleResult(float(best[full - 1]), Digraph(tuple(parents)))


def sequential_bdeu(data: Dataset, u: int, parents: Sequence[int], ess: float = 1.0,
                    row_order: Sequence[int] | None = None) -> float:
    """BDeu score as a product of posterior-predictive probabilities, row by row."""
    parents = tuple(sorted(parents))
    r = data.arities[u]
    q = 1
    for w in parents:
        q *= data.arities[w]
    a_jk = ess / (q * r)
    a_j = ess / q
    counts: dict[tuple, list[int]] = {}
    order = range(data.num_rows) if row_order is None else row_order
    total = 0.0
    for i in order:
        row = data.rows[i]
        j = tuple(int(row[w]) for w in parents)
        c = counts.setdefault(j, [0] * r)
        k = int(row[u])
        total += log((a_jk + c[k]) / (a_j + sum(c)))
        c[k] += 1
    return total


def joint_log_marginal(data: Dataset, g: Digraph, ess: float = 1.0) -> float:
    """Log marginal likelihood of ``g`` as a sum of joint one-row-ahead predictive terms."""
    n = data.n
    counts: list[dict[tuple, list[int]]] = [{} for _ in range(n)]
    q = [int(np.prod([data.arities[w] for w in g.parents[u]])) for u in range(n)]
    total = 0.0
    for row in data.rows.tolist():
        joint = 0.0
        for u in range(n):
            r = data.arities[u]
            c = counts[u].setdefault(tuple(row[w] for w in g.parents[u]), [0] * r)
            joint += log((ess / (q[u] * r) + c[row[u]]) / (ess / q[u] + sum(c)))
        total += joint
        for u in range(n):
            counts[u][tuple(row[w] for w in g.parents[u])][row[u]] += 1
    return total
