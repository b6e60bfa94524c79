import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bncut.ip_model import Digraph, digraph_score, is_acyclic
from bncut.oracle import (BRUTE_FORCE_MAX_N, DP_MAX_N, brute_force_optimal, dp_optimal,
                          sequential_bdeu)
from bncut.scores import Dataset, LocalScoreTable, prune, random_table
from bncut.solver import random_order_incumbent


def test_single_variable():
    t = LocalScoreTable(["a"], [[((), -2.0)]])
    for oracle in (brute_force_optimal, dp_optimal):
        res = oracle(t)
        assert res.score == -2.0 and res.digraph == Digraph(((),))


def test_two_cycle_excluded():
    t = LocalScoreTable(["a", "b"], [[((), -10.0), ((1,), -1.0)], [((), -10.0), ((0,), -2.0)]])
    for oracle in (brute_force_optimal, dp_optimal):
        res = oracle(t)
        assert res.score == -11.0 and res.digraph == Digraph(((1,), ()))


def test_size_guards():
    with pytest.raises(ValueError):
        brute_force_optimal(random_table(np.random.default_rng(0), BRUTE_FORCE_MAX_N + 1, 1))
    with pytest.raises(ValueError):
        dp_optimal(LocalScoreTable([str(i) for i in range(DP_MAX_N + 1)], [[((), 0.0)]] * (DP_MAX_N + 1)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_oracles_agree(seed, n):
    rng = np.random.default_rng(seed)
    t = random_table(rng, n, int(rng.integers(0, n)))
    if rng.random() < 0.5:
        t = prune(t)
    bf, dp = brute_force_optimal(t), dp_optimal(t)
    assert bf.score == pytest.approx(dp.score, abs=1e-9)
    for res in (bf, dp):
        assert is_acyclic(res.digraph)
        assert digraph_score(t, res.digraph) == pytest.approx(res.score, abs=1e-9)


def test_dp_n10_dominates_orders():
    t = prune(random_table(np.random.default_rng(1), 10, 2))
    start = time.perf_counter()
    best = dp_optimal(t)
    assert time.perf_counter() - start < 10
    assert best.score >= random_order_incumbent(t, 200, seed=3).score
    assert dp_optimal(prune(t)).score == best.score


def test_sequential_bdeu_basics():
    empty = Dataset(["a", "b"], [2, 2], np.zeros((0, 2), dtype=int))
    assert sequential_bdeu(empty, 0, (1,)) == 0.0
    rng = np.random.default_rng(4)
    d = Dataset(["a", "b", "c"], [2, 3, 2], np.column_stack([rng.integers(0, r, 10) for r in (2, 3, 2)]))
    a = sequential_bdeu(d, 1, (0, 2), 1.0, rng.permutation(10).tolist())
    b = sequential_bdeu(d, 1, (0, 2), 1.0, rng.permutation(10).tolist())
    assert a == pytest.approx(b, abs=1e-12)
