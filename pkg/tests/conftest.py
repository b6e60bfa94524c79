from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from bncut.ip_model import IpModel, all_dags, build_model
from bncut.lp import LpEngine
from bncut.scores import Dataset, LocalScoreTable, enumerate_scores, prune, read_score_file
from bncut.separation import cluster_rows, find_cluster_cuts
from bncut.synthetic import asia_like


def three_cycle_table() -> LocalScoreTable:
    """a prefers b, b prefers c, c prefers a; the arrow into c is the cheapest to drop."""
    return LocalScoreTable(["a", "b", "c"], [
        [((), -10.0), ((1,), -1.0)],
        [((), -10.0), ((2,), -2.0)],
        [((), -10.0), ((0,), -3.0)],
    ])


def dag_matrix(model: IpModel) -> np.ndarray:
    """Incidence vectors (one per row) of every DAG expressible with the model's columns."""
    index = {(c.child, c.parents): c.var_index for c in model.columns}
    rows = []
    for g in all_dags(model.n):
        cols = [index.get((u, w)) for u, w in enumerate(g.parents)]
        if None not in cols:
            x = np.zeros(model.num_columns)
            x[cols] = 1.0
            rows.append(x)
    return np.array(rows)


def row_vector(row, num_columns: int) -> np.ndarray:
    a = np.zeros(num_columns)
    for j, c in row.terms.items():
        a[j] = c
    return a


def random_fractional_point(rng: np.random.Generator, model: IpModel, sparsity: float = 0.5) -> np.ndarray:
    """Convexity-feasible point: a random distribution over each child's parent sets."""
    x = np.zeros(model.num_columns)
    for cols in model.by_child:
        w = rng.dirichlet(np.ones(len(cols)))
        w[rng.random(len(cols)) < sparsity] = 0.0
        if w.sum() == 0.0:
            w[rng.integers(len(cols))] = 1.0
        x[cols] = w / w.sum()
    return x


@pytest.fixture
def cycle_model() -> IpModel:
    return build_model(three_cycle_table())


DATA = Path(__file__).parent / "data"


def load_table(name: str) -> LocalScoreTable:
    return read_score_file((DATA / name).read_text())


def exhaust_cluster_cuts(model: IpModel, engine: LpEngine | None = None, with_k2: bool = True):
    """Root cut loop with cluster cuts only; returns the engine and the last LP solution."""
    engine = engine or LpEngine(model)
    while True:
        sol = engine.solve()
        found = find_cluster_cuts(sol.values, model)
        if not any([model.add_row(r) for r in cluster_rows(found.cuts, model, with_k2)]):
            return engine, sol


def asia_projection(seed: int, n: int, rows: tuple[int, int] = (30, 1000), pruned: bool = False):
    """Score table of ``n`` random columns of a sample from the asia-like network.

    Data-derived tables are much harder for the cut loop than i.i.d. random
    scores, which is what makes Gomory cuts appear at small n.
    """
    rng = np.random.default_rng(seed)
    bn = asia_like()
    while True:
        d = bn.sample(int(rng.integers(*rows)), rng)
        cols = sorted(rng.choice(len(bn.names), n, replace=False).tolist())
        if all(len(np.unique(d.rows[:, c])) == 2 for c in cols):
            break
    sub = Dataset([bn.names[c] for c in cols], [2] * n, d.rows[:, cols])
    table = enumerate_scores(sub, n - 1)
    return prune(table) if pruned else table
