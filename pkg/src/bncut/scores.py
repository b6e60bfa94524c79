"""Discrete datasets, BDeu local scores, pruning and score files."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, TextIO

import numpy as np
from scipy.special import gammaln


class FormatError(ValueError):
    """Raised for malformed dataset or score-file input."""


ParentSet = tuple[int, ...]


@dataclass
class Dataset:
    variable_names: list[str]
    arities: list[int]
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, len(self.variable_names))
        if len(self.arities) != len(self.variable_names):
            raise ValueError("one arity per variable required")
        for u, r in enumerate(self.arities):
            if r < 2:
                raise ValueError(f"variable {self.variable_names[u]!r} has arity {r} < 2")
        if self.rows.size:
            if self.rows.min() < 0 or np.any(self.rows.max(axis=0) >= np.asarray(self.arities)):
                raise ValueError("category index out of range")

    @property
    def n(self) -> int:
        return len(self.variable_names)

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]


@dataclass
class LocalScoreTable:
    """Candidate parent sets and their local scores, per child variable.

    ``entries[u]`` is a list of ``(parents, score)`` with ``parents`` a sorted
    tuple of variable indices.
    """

    names: list[str]
    entries: list[list[tuple[ParentSet, float]]]

    @property
    def n(self) -> int:
        return len(self.names)

    def num_entries(self) -> int:
        return sum(len(e) for e in self.entries)

    def score_of(self, u: int, parents: Iterable[int]) -> float:
        key = tuple(sorted(parents))
        for w, s in self.entries[u]:
            if w == key:
                return s
        raise KeyError(f"{key} is not a candidate parent set of {self.names[u]}")

    def validate(self, max_parents: int | None = None) -> None:
        for u, ents in enumerate(self.entries):
            seen = set()
            for w, s in ents:
                if w in seen:
                    raise FormatError(f"duplicate parent set {w} for {self.names[u]}")
                seen.add(w)
                if u in w or tuple(sorted(set(w))) != w:
                    raise FormatError(f"bad parent set {w} for {self.names[u]}")
                if any(p < 0 or p >= self.n for p in w):
                    raise FormatError(f"parent index out of range in {w}")
                if not np.isfinite(s):
                    raise FormatError(f"non-finite score for {self.names[u]} <- {w}")
                if max_parents is not None and len(w) > max_parents:
                    raise FormatError(f"parent set {w} exceeds limit {max_parents}")


# ---------------------------------------------------------------- datasets

def read_dataset(stream: TextIO | str) -> Dataset:
    """Parse a comma separated file: header of names, then categorical tokens.

    Categories are indexed per column in order of first appearance.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = [ln.strip() for ln in stream.read().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError("empty dataset: no header")
    names = [t.strip() for t in lines[0].split(",")]
    n = len(names)
    if len(set(names)) != n:
        raise FormatError("duplicate variable names in header")
    if len(lines) == 1:
        raise FormatError("empty dataset: no data rows")
    codes: list[dict[str, int]] = [{} for _ in range(n)]
    rows = np.empty((len(lines) - 1, n), dtype=np.int64)
    for i, ln in enumerate(lines[1:]):
        toks = [t.strip() for t in ln.split(",")]
        if len(toks) != n:
            raise FormatError(f"row {i + 1} has {len(toks)} fields, expected {n}")
        for u, tok in enumerate(toks):
            rows[i, u] = codes[u].setdefault(tok, len(codes[u]))
    arities = [len(c) for c in codes]
    for u, r in enumerate(arities):
        if r < 2:
            raise FormatError(f"column {names[u]!r} takes a single value")
    return Dataset(names, arities, rows)


def write_dataset(data: Dataset) -> str:
    out = [",".join(data.variable_names)]
    out += [",".join(str(v) for v in row) for row in data.rows.tolist()]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- scoring

def _family_counts(data: Dataset, u: int, parents: ParentSet) -> np.ndarray:
    """Counts N_jk for the observed parent configurations only (shape q_obs x r)."""
    r = data.arities[u]
    if not parents:
        return np.bincount(data.rows[:, u], minlength=r)[None, :]
    cols = data.rows[:, list(parents)]
    _, config = np.unique(cols, axis=0, return_inverse=True)
    config = config.reshape(-1)
    counts = np.zeros((config.max() + 1, r), dtype=np.int64)
    np.add.at(counts, (config, data.rows[:, u]), 1)
    return counts


def bdeu_local_score(data: Dataset, u: int, parents: Iterable[int], ess: float = 1.0) -> float:
    """BDeu log marginal likelihood of column ``u`` given ``parents``."""
    parents = tuple(sorted(parents))
    if u in parents:
        raise ValueError("a variable cannot be its own parent")
    if ess <= 0:
        raise ValueError("ess must be positive")
    if data.num_rows == 0:
        return 0.0
    r = data.arities[u]
    q = float(np.prod([data.arities[w] for w in parents])) if parents else 1.0
    a_j = ess / q
    a_jk = ess / (q * r)
    counts = _family_counts(data, u, parents)
    n_j = counts.sum(axis=1)
    score = np.sum(gammaln(a_j) - gammaln(a_j + n_j))
    score += np.sum(gammaln(a_jk + counts) - gammaln(a_jk))
    return float(score)


def enumerate_scores(data: Dataset, max_parents: int, ess: float = 1.0,
                     budget: int = 10**7) -> LocalScoreTable:
    n = data.n
    if not 0 <= max_parents <= max(n - 1, 0):
        raise ValueError(f"max_parents must lie in [0, {n - 1}]")
    per_var = sum(comb(n - 1, k) for k in range(max_parents + 1))
    if n * per_var > budget:
        raise ValueError(f"{n * per_var} parent sets exceed the budget of {budget}")
    entries = []
    for u in range(n):
        others = [v for v in range(n) if v != u]
        ents = []
        for k in range(max_parents + 1):
            for w in combinations(others, k):
                ents.append((w, bdeu_local_score(data, u, w, ess)))
        entries.append(ents)
    return LocalScoreTable(list(data.variable_names), entries)


def prune(table: LocalScoreTable) -> LocalScoreTable:
    """Drop every parent set scoring no better than one of its proper subsets.

    Assumes all subsets of a listed parent set are listed too.
    """
    entries = []
    for ents in table.entries:
        score = dict(ents)
        # best score over all subsets, computed smallest-first
        best_sub: dict[ParentSet, float] = {}
        for w in sorted(score, key=len):
            best = -np.inf
            for i in range(len(w)):
                sub = w[:i] + w[i + 1:]
                if sub in best_sub:
                    best = max(best, best_sub[sub], score[sub])
            best_sub[w] = best
        entries.append([(w, s) for w, s in ents if not (w and best_sub[w] >= s)])
    return LocalScoreTable(list(table.names), entries)


# ---------------------------------------------------------------- score files

def _format_score(x: float) -> str:
    for digits in range(6, 40):
        s = f"{x:.{digits}f}"
        if float(s) == x:
            return s
    return repr(x)


def write_score_file(table: LocalScoreTable) -> str:
    out = [str(table.n)]
    for u, ents in enumerate(table.entries):
        out.append(f"{table.names[u]} {len(ents)}")
        for w, s in ents:
            out.append(" ".join([_format_score(s), str(len(w))] + [table.names[p] for p in w]))
    return "\n".join(out) + "\n"


def read_score_file(stream: TextIO | str) -> LocalScoreTable:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = [ln.split() for ln in stream.read().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError("empty score file")
    try:
        n = int(lines[0][0])
    except ValueError as e:
        raise FormatError(f"bad variable count {lines[0][0]!r}") from e
    if len(lines[0]) != 1 or n < 1:
        raise FormatError("first line must hold the variable count")

    # first pass: collect names so parents may be referenced before declaration
    blocks = []
    pos = 1
    for _ in range(n):
        if pos >= len(lines):
            raise FormatError("fewer variable blocks than declared")
        head = lines[pos]
        if len(head) != 2:
            raise FormatError(f"bad variable header {' '.join(head)!r}")
        try:
            k = int(head[1])
        except ValueError as e:
            raise FormatError(f"bad parent-set count in {' '.join(head)!r}") from e
        if k < 0:
            raise FormatError("negative parent-set count")
        body = lines[pos + 1: pos + 1 + k]
        if len(body) != k:
            raise FormatError(f"variable {head[0]} declares {k} parent sets, found {len(body)}")
        blocks.append((head[0], body))
        pos += 1 + k
    if pos != len(lines):
        raise FormatError(f"{len(lines) - pos} unexpected trailing lines (count mismatch?)")

    names = [b[0] for b in blocks]
    if len(set(names)) != n:
        raise FormatError("duplicate variable names")
    index = {name: i for i, name in enumerate(names)}
    entries = []
    for u, (name, body) in enumerate(blocks):
        ents = []
        seen = set()
        for toks in body:
            try:
                s = float(toks[0])
                p = int(toks[1])
            except (ValueError, IndexError) as e:
                raise FormatError(f"bad score line {' '.join(toks)!r}") from e
            if len(toks) != 2 + p:
                raise FormatError(f"parent count mismatch in {' '.join(toks)!r}")
            try:
                w = tuple(sorted(index[t] for t in toks[2:]))
            except KeyError as e:
                raise FormatError(f"unknown variable {e.args[0]!r}") from e
            if len(set(w)) != p or u in w:
                raise FormatError(f"invalid parent set in {' '.join(toks)!r}")
            if w in seen:
                raise FormatError(f"duplicate parent set for {name}")
            seen.add(w)
            ents.append((w, s))
        entries.append(ents)
    table = LocalScoreTable(names, entries)
    table.validate()
    return table


def random_table(rng: np.random.Generator, n: int, max_parents: int,
                 scale: float = 10.0) -> LocalScoreTable:
    """Complete (unpruned) table with i.i.d. negative scores."""
    entries = []
    for u in range(n):
        others = [v for v in range(n) if v != u]
        ents = []
        for k in range(max_parents + 1):
            for w in combinations(others, k):
                ents.append((w, -float(rng.exponential(scale))))
        entries.append(ents)
    return LocalScoreTable([f"X{i}" for i in range(n)], entries)
