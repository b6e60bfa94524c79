"""Family-variable integer program, cluster rows and DAG utilities."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .scores import LocalScoreTable, ParentSet

INT_TOL = 1e-6

GE, LE, EQ = ">=", "<=", "="


@dataclass(frozen=True)
class FamilyVar:
    var_index: int
    child: int
    parents: ParentSet
    objective_coeff: float


@dataclass
class LinearConstraint:
    terms: dict[int, float]
    sense: str
    rhs: float
    origin: tuple = ("convexity",)

    def __post_init__(self):
        self.terms = {j: float(a) for j, a in self.terms.items() if a != 0.0}
        if self.sense not in (GE, LE, EQ):
            raise ValueError(f"unknown sense {self.sense!r}")

    @property
    def is_integral(self) -> bool:
        return float(self.rhs).is_integer() and all(float(a).is_integer() for a in self.terms.values())

    def activity(self, x: Sequence[float]) -> float:
        return sum(a * x[j] for j, a in self.terms.items())

    def violation(self, x: Sequence[float]) -> float:
        """Amount by which ``x`` violates the row (<= 0 when satisfied)."""
        act = self.activity(x)
        if self.sense == GE:
            return self.rhs - act
        if self.sense == LE:
            return act - self.rhs
        return abs(act - self.rhs)


@dataclass
class IpModel:
    names: list[str]
    columns: list[FamilyVar]
    rows: list[LinearConstraint] = field(default_factory=list)

    def __post_init__(self):
        self.by_child: list[list[int]] = [[] for _ in self.names]
        for col in self.columns:
            self.by_child[col.child].append(col.var_index)
        self.parent_masks = np.array([sum(1 << p for p in c.parents) for c in self.columns], dtype=np.int64)
        self.objective = np.array([c.objective_coeff for c in self.columns])
        self.children = np.array([c.child for c in self.columns], dtype=np.int64)
        self._cluster_keys: set[tuple[frozenset, int]] = set()

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def num_columns(self) -> int:
        return len(self.columns)

    def has_cluster(self, cluster: Iterable[int], k: int) -> bool:
        return (frozenset(cluster), k) in self._cluster_keys

    def add_row(self, row: LinearConstraint) -> bool:
        """Append a row; cluster rows already present (same C and k) are rejected."""
        if row.origin[0] == "cluster":
            key = (frozenset(row.origin[1]), row.origin[2])
            if key in self._cluster_keys:
                return False
            self._cluster_keys.add(key)
        self.rows.append(row)
        return True

    def table(self) -> LocalScoreTable:
        entries = [[(self.columns[j].parents, self.columns[j].objective_coeff) for j in cols]
                   for cols in self.by_child]
        return LocalScoreTable(list(self.names), entries)

    def column_of(self, child: int, parents: Iterable[int]) -> int:
        key = tuple(sorted(parents))
        for j in self.by_child[child]:
            if self.columns[j].parents == key:
                return j
        raise KeyError(f"no column for {self.names[child]} <- {key}")


@dataclass(frozen=True)
class Digraph:
    parents: tuple[ParentSet, ...]

    def __post_init__(self):
        for u, w in enumerate(self.parents):
            if u in w:
                raise ValueError(f"vertex {u} lists itself as a parent")

    @property
    def n(self) -> int:
        return len(self.parents)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Digraph":
        pa: list[set[int]] = [set() for _ in range(n)]
        for a, b in edges:
            pa[b].add(a)
        return cls(tuple(tuple(sorted(p)) for p in pa))

    def edges(self) -> list[tuple[int, int]]:
        return [(p, u) for u, w in enumerate(self.parents) for p in w]


def build_model(table: LocalScoreTable) -> IpModel:
    columns = []
    for u, ents in enumerate(table.entries):
        if not ents:
            raise ValueError(f"variable {table.names[u]} has no candidate parent sets")
        for w, s in ents:
            columns.append(FamilyVar(len(columns), u, tuple(w), float(s)))
    model = IpModel(list(table.names), columns)
    for u in range(table.n):
        model.add_row(LinearConstraint({j: 1.0 for j in model.by_child[u]}, EQ, 1.0, ("convexity", u)))
    return model


def cluster_row(model: IpModel, cluster: Iterable[int], k: int) -> LinearConstraint:
    """Row stating that at least ``k`` members of ``cluster`` have < k parents inside it.

    For k == 1 each child's block is written in complemented form
    (``1 - sum over parent sets meeting C``) when that has fewer terms.
    """
    cset = frozenset(cluster)
    if len(cset) < 2:
        raise ValueError("cluster must contain at least two vertices")
    if not 1 <= k <= len(cset):
        raise ValueError(f"k must lie in [1, {len(cset)}]")
    cmask = sum(1 << v for v in cset)
    terms: dict[int, float] = {}
    rhs = float(k)
    for u in sorted(cset):
        cols = model.by_child[u]
        inside = [j for j in cols if bin(int(model.parent_masks[j]) & cmask).count("1") < k]
        if k == 1:
            outside = [j for j in cols if model.parent_masks[j] & cmask]
            if len(outside) < len(inside):
                for j in outside:
                    terms[j] = -1.0
                rhs -= 1.0
                continue
        for j in inside:
            terms[j] = 1.0
    return LinearConstraint(terms, GE, rhs, ("cluster", tuple(sorted(cset)), k))


def cluster_support(model: IpModel, cluster: Iterable[int]) -> list[int]:
    """Columns with W ∩ C = ∅ and child in C (direct form of the 1-cluster row)."""
    cset = set(cluster)
    cmask = sum(1 << v for v in cset)
    return [j for u in sorted(cset) for j in model.by_child[u] if not model.parent_masks[j] & cmask]


# ---------------------------------------------------------------- digraphs

def extract_digraph(model: IpModel, assignment: Sequence[float]) -> Digraph:
    x = np.asarray(assignment, dtype=float)
    if x.shape != (model.num_columns,):
        raise ValueError("assignment length does not match the model")
    if np.any(np.minimum(np.abs(x), np.abs(x - 1.0)) > INT_TOL):
        raise ValueError("assignment is fractional")
    parents = []
    for u, cols in enumerate(model.by_child):
        chosen = [j for j in cols if x[j] > 0.5]
        if abs(x[cols].sum() - 1.0) > INT_TOL or len(chosen) != 1:
            raise ValueError(f"convexity row of {model.names[u]} violated")
        parents.append(model.columns[chosen[0]].parents)
    return Digraph(tuple(parents))


def incidence_vector(model: IpModel, g: Digraph) -> np.ndarray:
    x = np.zeros(model.num_columns)
    for u, w in enumerate(g.parents):
        x[model.column_of(u, w)] = 1.0
    return x


def digraph_score(table_or_model, g: Digraph) -> float:
    if isinstance(table_or_model, IpModel):
        table_or_model = table_or_model.table()
    return float(sum(table_or_model.score_of(u, w) for u, w in enumerate(g.parents)))


def topological_order(g: Digraph) -> list[int] | None:
    """Depth-first topological sort; None when ``g`` has a cycle."""
    n = g.n
    children: list[list[int]] = [[] for _ in range(n)]
    for u, w in enumerate(g.parents):
        for p in w:
            children[p].append(u)
    state = [0] * n  # 0 new, 1 on stack, 2 done
    order: list[int] = []
    for root in range(n):
        if state[root]:
            continue
        stack = [(root, iter(children[root]))]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[v] = 2
                order.append(v)
                stack.pop()
            elif state[nxt] == 1:
                return None
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(children[nxt])))
    order.reverse()
    return order


def is_acyclic(g: Digraph) -> bool:
    return topological_order(g) is not None


def find_cycle(g: Digraph) -> list[int] | None:
    """Vertices of some directed cycle (in edge order), or None."""
    n = g.n
    state = [0] * n
    for root in range(n):
        if state[root]:
            continue
        path = [root]
        state[root] = 1
        stack = [iter(g.parents[root])]
        # walk parent links; a cycle over parent links is a cycle reversed
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                state[path.pop()] = 2
                stack.pop()
            elif state[nxt] == 1:
                cyc = path[path.index(nxt):]
                return cyc[::-1]
            elif state[nxt] == 0:
                state[nxt] = 1
                path.append(nxt)
                stack.append(iter(g.parents[nxt]))
    return None


def surplus(g: Digraph, cluster: Iterable[int], k: int) -> int:
    cset = set(cluster)
    if len(cset) < 2 or not 1 <= k <= len(cset):
        raise ValueError("need |C| >= 2 and 1 <= k <= |C|")
    if not is_acyclic(g):
        raise ValueError("surplus is defined for acyclic graphs only")
    return sum(1 for u in cset if len(cset.intersection(g.parents[u])) < k) - k


def skeleton_and_immoralities(g: Digraph) -> tuple[set[frozenset], set[tuple[int, int, int]]]:
    """Undirected edges and immoralities ``(a, child, b)`` with ``a < b``."""
    if not is_acyclic(g):
        raise ValueError("graph has a cycle")
    skel = {frozenset(e) for e in g.edges()}
    imm = set()
    for w, pa in enumerate(g.parents):
        for a, b in combinations(pa, 2):
            if frozenset((a, b)) not in skel:
                imm.add((a, w, b))
    return skel, imm


def markov_from_surplus(g: Digraph) -> tuple[set[frozenset], set[tuple[int, int, int]]]:
    """Skeleton and immoralities recovered only from 1-cluster surplus values."""
    n = g.n
    s2 = {frozenset(c): surplus(g, c, 1) for c in combinations(range(n), 2)}
    skel = {c for c, s in s2.items() if s == 0}
    imm = set()
    for w in range(n):
        for a, b in combinations([v for v in range(n) if v != w], 2):
            if (s2[frozenset((a, w))] == 0 and s2[frozenset((b, w))] == 0
                    and s2[frozenset((a, b))] == 1 and surplus(g, (a, b, w), 1) == 1):
                imm.add((a, w, b))
    return skel, imm


def format_digraph(names: Sequence[str], g: Digraph, score: float | None = None) -> str:
    out = [f"{names[u]} <- {','.join(names[p] for p in w)}" for u, w in enumerate(g.parents)]
    if score is not None:
        out.append(f"score {score:.6f}")
    return "\n".join(out) + "\n"


def to_dot(names: Sequence[str], g: Digraph) -> str:
    out = ["digraph bn {"]
    out += [f'  "{n}";' for n in names]
    out += [f'  "{names[a]}" -> "{names[b]}";' for a, b in sorted(g.edges())]
    out.append("}")
    return "\n".join(out) + "\n"


def acyclic_rows(parent_masks: np.ndarray) -> np.ndarray:
    """Vectorised acyclicity test; ``parent_masks[i, u]`` is the parent bitmask of u in graph i."""
    pm = np.asarray(parent_masks, dtype=np.int64)
    k, n = pm.shape
    placed = np.zeros(k, dtype=np.int64)
    for _ in range(n):
        for u in range(n):
            bit = np.int64(1 << u)
            ready = ((pm[:, u] & ~placed) == 0) & ((placed & bit) == 0)
            placed |= np.where(ready, bit, np.int64(0))
    return placed == (1 << n) - 1


def all_dags(n: int) -> list[Digraph]:
    """Every DAG on ``n`` labelled vertices (543 for n = 4, 29281 for n = 5)."""
    per_vertex = []
    for u in range(n):
        others = [v for v in range(n) if v != u]
        per_vertex.append(np.array([sum(1 << p for p in w) for k in range(n)
                                    for w in combinations(others, k)], dtype=np.int64))
    grids = np.meshgrid(*per_vertex, indexing="ij")
    pm = np.stack([g.reshape(-1) for g in grids], axis=1)
    pm = pm[acyclic_rows(pm)]
    return [Digraph(tuple(tuple(v for v in range(n) if m >> v & 1) for m in row)) for row in pm.tolist()]
