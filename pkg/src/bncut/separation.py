"""Separation of violated 1-cluster constraints by depth-first constraint search.

The search decides cluster membership vertex by vertex.  A family term
``(u, W)`` with LP weight ``x[u, W]`` is switched on once ``u`` is in the cluster
and every member of ``W`` is out; its weight is then locked into the running
objective.  A subtree is abandoned as soon as the locked weight reaches
``1 - violation_tol``, since every completion would satisfy the constraint.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ip_model import IpModel, LinearConstraint, cluster_row, cluster_support

VIOLATION_TOL = 1e-4
ZERO_TOL = 1e-9

IN, OUT, UNDECIDED = 1, 0, -1


@dataclass(frozen=True)
class FoundCut:
    cluster: tuple[int, ...]
    violation: float
    efficacy: float


@dataclass
class SeparationResult:
    cuts: list[FoundCut]
    nodes: int = 0
    truncated: bool = False
    elapsed: float = 0.0

    def __iter__(self):
        return iter(self.cuts)

    def __len__(self):
        return len(self.cuts)


@dataclass
class ClusterAssignment:
    """Partial membership assignment explored by the search."""

    membership: list[int]
    locked_objective: float = 0.0
    members: int = 0


def subip_objective(x: Sequence[float], cluster, model: IpModel) -> float:
    """Total LP weight on family terms with child in C and no parent in C."""
    x = np.asarray(x, dtype=float)
    return float(x[cluster_support(model, cluster)].sum())


def efficacy(cut: FoundCut | Sequence[int], x: Sequence[float], model: IpModel) -> float:
    cluster = cut.cluster if isinstance(cut, FoundCut) else tuple(cut)
    support = cluster_support(model, cluster)
    viol = 1.0 - float(np.asarray(x, dtype=float)[support].sum())
    return viol / math.sqrt(len(support)) if support else math.inf


def _branching_order(x: np.ndarray, model: IpModel) -> list[int]:
    """Vertices by decreasing fractional mass touching them (as child or parent)."""
    weight = np.zeros(model.n)
    for j in np.flatnonzero(x > ZERO_TOL):
        col = model.columns[j]
        weight[col.child] += x[j]
        for p in col.parents:
            weight[p] += x[j]
    return sorted(range(model.n), key=lambda v: (-weight[v], v))


def find_cluster_cuts(x: Sequence[float], model: IpModel, time_limit: float | None = None,
                      max_cuts: int | None = None,
                      violation_tol: float = VIOLATION_TOL) -> SeparationResult:
    """Every cluster (|C| >= 2) whose 1-cluster row ``x`` violates by more than ``violation_tol``.

    With ``time_limit`` or ``max_cuts`` the search may stop early; the result is
    then flagged ``truncated`` and holds whatever was found so far.
    """
    x = np.asarray(x, dtype=float)
    start = time.perf_counter()
    n = model.n
    order = _branching_order(x, model)
    depth_of = {v: d for d, v in enumerate(order)}
    cutoff = 1.0 - violation_tol

    # family terms grouped by the depth at which they become fully decided
    decided_at: list[list[tuple[int, int, float]]] = [[] for _ in range(n)]
    for j in np.flatnonzero(x > ZERO_TOL):
        col = model.columns[j]
        d = max([depth_of[col.child]] + [depth_of[p] for p in col.parents])
        decided_at[d].append((col.child, int(model.parent_masks[j]), float(x[j])))

    state = ClusterAssignment([UNDECIDED] * n)
    found: list[tuple[int, ...]] = []
    nodes = 0
    truncated = False
    in_mask = 0

    def locked_gain(depth: int) -> float:
        gain = 0.0
        for child, pmask, w in decided_at[depth]:
            if in_mask >> child & 1 and not pmask & in_mask:
                gain += w
        return gain

    # iterative DFS; each frame is (depth, next_choice)
    stack: list[list[int]] = [[0, IN]]
    gains: list[float] = []
    while stack:
        frame = stack[-1]
        depth, choice = frame
        if choice is None:
            stack.pop()
            if stack:
                # undo this vertex's decision made by the parent frame
                v = order[stack[-1][0]]
                state.locked_objective -= gains.pop()
                if state.membership[v] == IN:
                    in_mask &= ~(1 << v)
                    state.members -= 1
                state.membership[v] = UNDECIDED
            continue
        if depth == n:
            if state.members >= 2 and state.locked_objective < cutoff:
                found.append(tuple(sorted(v for v in range(n) if in_mask >> v & 1)))
                if max_cuts is not None and len(found) >= max_cuts:
                    truncated = True
                    break
            frame[1] = None
            continue
        if time_limit is not None and nodes % 256 == 0 and time.perf_counter() - start > time_limit:
            truncated = True
            break
        v = order[depth]
        frame[1] = OUT if choice == IN else None
        # members still possible: current + undecided remaining
        if choice == OUT and state.members + (n - depth - 1) < 2:
            continue
        nodes += 1
        state.membership[v] = choice
        if choice == IN:
            in_mask |= 1 << v
            state.members += 1
        gain = locked_gain(depth)
        if state.locked_objective + gain >= cutoff:
            state.membership[v] = UNDECIDED
            if choice == IN:
                in_mask &= ~(1 << v)
                state.members -= 1
            continue
        state.locked_objective += gain
        gains.append(gain)
        stack.append([depth + 1, IN])

    cuts = []
    for cluster in found:
        support = cluster_support(model, cluster)
        viol = 1.0 - float(x[support].sum())
        if viol > violation_tol:
            cuts.append(FoundCut(cluster, viol, viol / math.sqrt(len(support)) if support else math.inf))
    return SeparationResult(cuts, nodes, truncated, time.perf_counter() - start)


def brute_force_cluster_cuts(x: Sequence[float], model: IpModel,
                             violation_tol: float = VIOLATION_TOL) -> set[tuple[int, ...]]:
    """All violated 1-cluster constraints by enumerating every vertex subset."""
    from itertools import combinations

    x = np.asarray(x, dtype=float)
    out = set()
    for k in range(2, model.n + 1):
        for c in combinations(range(model.n), k):
            if 1.0 - subip_objective(x, c, model) > violation_tol:
                out.add(c)
    return out


def cluster_rows(cuts: Sequence[FoundCut], model: IpModel, with_k2: bool = True) -> list[LinearConstraint]:
    rows = [cluster_row(model, c.cluster, 1) for c in cuts]
    if with_k2:
        rows += paired_k2_cuts(cuts, model)
    return rows


def paired_k2_cuts(cuts: Sequence[FoundCut], model: IpModel) -> list[LinearConstraint]:
    """The k = 2 row for each found cluster with at least three members."""
    return [cluster_row(model, c.cluster, 2) for c in cuts if len(c.cluster) >= 3]
