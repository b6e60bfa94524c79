import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bncut.ip_model import build_model, cluster_row
from bncut.scores import LocalScoreTable, prune, random_table
from bncut.separation import (FoundCut, brute_force_cluster_cuts, efficacy, find_cluster_cuts,
                              paired_k2_cuts, subip_objective)

from conftest import dag_matrix, random_fractional_point, row_vector


def symmetric_model():
    """Each of a, b, c may take any single other vertex as parent."""
    ents = []
    for u in range(3):
        others = [v for v in range(3) if v != u]
        ents.append([((), -3.0)] + [((v,), -1.0) for v in others])
    return build_model(LocalScoreTable(["a", "b", "c"], ents))


def symmetric_point(model):
    x = np.zeros(model.num_columns)
    for c in model.columns:
        if c.parents:
            x[c.var_index] = 0.5
    return x


def cycle_point(model):
    x = np.zeros(model.num_columns)
    for u, w in [(0, (1,)), (1, (2,)), (2, (0,))]:
        x[model.column_of(u, w)] = 1.0
    return x


def test_integral_cycle_gives_the_cycle(cycle_model):
    res = find_cluster_cuts(cycle_point(cycle_model), cycle_model)
    assert [c.cluster for c in res] == [(0, 1, 2)]
    assert res.cuts[0].violation == pytest.approx(1.0)
    assert not res.truncated


def test_symmetric_half_point():
    m = symmetric_model()
    x = symmetric_point(m)
    res = find_cluster_cuts(x, m)
    assert [c.cluster for c in res] == [(0, 1, 2)]
    assert res.cuts[0].violation == pytest.approx(1.0)
    assert subip_objective(x, (0, 1, 2), m) == 0.0
    for pair in [(0, 1), (0, 2), (1, 2)]:
        assert subip_objective(x, pair, m) == pytest.approx(1.0)


def test_dag_point_gives_nothing(cycle_model):
    x = np.zeros(6)
    for u, w in [(0, (1,)), (1, (2,)), (2, ())]:
        x[cycle_model.column_of(u, w)] = 1.0
    assert len(find_cluster_cuts(x, cycle_model)) == 0


def test_subip_objective_isolated_pair():
    m = build_model(LocalScoreTable(["a", "b"], [[((), -1.0)], [((), -1.0)]]))
    assert subip_objective(np.ones(2), (0, 1), m) == 2.0


def test_efficacy_examples(cycle_model):
    cut = find_cluster_cuts(cycle_point(cycle_model), cycle_model).cuts[0]
    assert cut.efficacy == pytest.approx(1 / math.sqrt(3))
    assert efficacy(cut, cycle_point(cycle_model), cycle_model) == pytest.approx(1 / math.sqrt(3))
    # one column in the support: efficacy equals violation
    m = build_model(LocalScoreTable(["a", "b"], [[((), -1.0)], [((0,), -1.0)]]))
    assert efficacy((0, 1), np.array([0.8, 1.0]), m) == pytest.approx(0.2)


def test_efficacy_monotone_in_violation(cycle_model):
    effs = []
    for v in [0.0, 0.3, 0.6]:
        x = np.zeros(6)
        for u in range(3):
            x[cycle_model.column_of(u, ())] = v / 3
        effs.append(efficacy((0, 1, 2), x, cycle_model))
    assert effs[0] > effs[1] > effs[2]


def test_paired_k2(cycle_model):
    cuts = [FoundCut((0, 1, 2), 1.0, 0.5), FoundCut((0, 1), 0.5, 0.5)]
    rows = paired_k2_cuts(cuts, cycle_model)
    assert len(rows) == 1
    assert rows[0].origin == ("cluster", (0, 1, 2), 2) and rows[0].rhs == 2.0


def test_paired_k2_rows_hold_for_all_dags_n4():
    rng = np.random.default_rng(8)
    m = build_model(random_table(rng, 4, 3))
    X = dag_matrix(m)
    for _ in range(10):
        x = random_fractional_point(rng, m)
        for row in paired_k2_cuts(find_cluster_cuts(x, m).cuts, m):
            assert (X @ row_vector(row, m.num_columns) >= row.rhs - 1e-12).all()


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7))
def test_exhaustive_search_equals_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    m = build_model(prune(random_table(rng, n, min(2, n - 1))))
    x = random_fractional_point(rng, m, sparsity=float(rng.uniform(0.2, 0.8)))
    found = {c.cluster for c in find_cluster_cuts(x, m)}
    assert found == brute_force_cluster_cuts(x, m)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_found_cuts_are_sound(seed):
    rng = np.random.default_rng(seed)
    m = build_model(prune(random_table(rng, 5, 2)))
    X = dag_matrix(m)
    x = random_fractional_point(rng, m)
    for cut in find_cluster_cuts(x, m):
        row = cluster_row(m, cut.cluster, 1)
        assert row.violation(x) > 1e-4
        assert len(cut.cluster) >= 2
        assert (X @ row_vector(row, m.num_columns) >= row.rhs - 1e-12).all()


def test_limits_truncate():
    rng = np.random.default_rng(3)
    m = build_model(prune(random_table(rng, 7, 2)))
    x = random_fractional_point(rng, m, sparsity=0.2)
    full = {c.cluster for c in find_cluster_cuts(x, m)}
    assert len(full) > 3
    part = find_cluster_cuts(x, m, max_cuts=3)
    assert part.truncated and len(part) <= 3 and {c.cluster for c in part} <= full
    timed = find_cluster_cuts(x, m, time_limit=0.0)
    assert timed.truncated and {c.cluster for c in timed} <= full


def test_deterministic():
    rng = np.random.default_rng(9)
    m = build_model(prune(random_table(rng, 6, 2)))
    x = random_fractional_point(rng, m)
    assert find_cluster_cuts(x, m).cuts == find_cluster_cuts(x, m).cuts
