"""Solver effort on random score tables under the cut-configuration switches.

Prints one CSV line per (instance, configuration). Tables come either from
i.i.d. random scores or from random column subsets of asia-like samples;
the latter are harder for the cut loop at the same size.

    python scripts/random_benchmark.py --sizes 6 8 10 --reps 5 --source data
"""

import argparse
import csv
import sys
import time

import numpy as np

from bncut.ip_model import build_model
from bncut.oracle import DP_MAX_N, dp_optimal
from bncut.scores import Dataset, enumerate_scores, prune, random_table
from bncut.solver import SolverParams, gap_tol, solve
from bncut.synthetic import asia_like

CONFIGS = {
    "default": {},
    "no-gomory": {"gomory": False},
    "k1-only": {"k2_cuts": False},
}


def data_table(rng: np.random.Generator, n: int, m: int):
    bn = asia_like()
    while True:
        d = bn.sample(int(rng.integers(50, 2000)), rng)
        cols = sorted(rng.choice(len(bn.names), n, replace=False).tolist())
        if all(len(np.unique(d.rows[:, c])) == 2 for c in cols):
            break
    sub = Dataset([bn.names[c] for c in cols], [2] * n, d.rows[:, cols])
    return prune(enumerate_scores(sub, m))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10])
    ap.add_argument("--max-parents", type=int, default=2)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--source", choices=["iid", "data"], default="iid")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.source == "data" and max(args.sizes) > 8:
        ap.error("the asia-like network has 8 variables")

    rng = np.random.default_rng(args.seed)
    out = csv.writer(sys.stdout)
    out.writerow(["n", "rep", "families", "config", "score", "proven", "dp_ok", "nodes",
                  "cluster_cuts", "k2_cuts", "gomory_cuts", "lp_iterations", "seconds"])
    for n in args.sizes:
        m = min(args.max_parents, n - 1)
        for rep in range(args.reps):
            table = data_table(rng, n, m) if args.source == "data" else prune(random_table(rng, n, m))
            ref = dp_optimal(table).score if n <= DP_MAX_N else None
            for name, kw in CONFIGS.items():
                start = time.perf_counter()
                res = solve(build_model(table), SolverParams(**kw))
                elapsed = time.perf_counter() - start
                st = res.stats
                ok = "" if ref is None else abs(ref - res.optimal.score) <= gap_tol(ref)
                out.writerow([n, rep, table.num_entries(), name, f"{res.optimal.score:.6f}", res.proven, ok,
                              st.nodes, st.cluster_cuts, st.k2_cuts, st.gomory_cuts, st.lp_iterations,
                              f"{elapsed:.3f}"])
                sys.stdout.flush()


if __name__ == "__main__":
    main()
