"""Command-line front end.

    bncut score data.csv -m 3 -o data.scores
    bncut solve data.scores --verify --dot graph.dot
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .ip_model import build_model, format_digraph, to_dot
from .oracle import DP_MAX_N, dp_optimal
from .scores import FormatError, enumerate_scores, prune, read_dataset, read_score_file, write_score_file
from .solver import SolverParams, gap_tol, solve

log = logging.getLogger("bncut")

EXIT_OK, EXIT_ERROR, EXIT_TRUNCATED, EXIT_MISMATCH = 0, 1, 3, 4


@dataclass
class RunConfig:
    subcommand: str
    input: Path
    output: Path | None = None
    max_parents: int = 3
    ess: float = 1.0
    time_limit: float | None = None
    subip_time_limit: float | None = None
    no_gomory: bool = False
    no_k2_cuts: bool = False
    no_heuristics: bool = False
    verify: bool = False
    dot: Path | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_parents < 0:
            raise ValueError("max parents must be >= 0")
        if self.ess <= 0:
            raise ValueError("ess must be positive")
        for name in ("time_limit", "subip_time_limit"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name.replace('_', '-')} must be positive")


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def run_score(cfg: RunConfig) -> int:
    with open(cfg.input, encoding="utf-8") as fh:
        data = read_dataset(fh)
    m = min(cfg.max_parents, data.n - 1)
    table = enumerate_scores(data, m, cfg.ess)
    pruned = prune(table)
    log.info("%d variables, %d rows; %d parent sets before pruning, %d after",
             data.n, data.num_rows, table.num_entries(), pruned.num_entries())
    _write(cfg.output, write_score_file(pruned))
    return EXIT_OK


def run_solve(cfg: RunConfig) -> int:
    with open(cfg.input, encoding="utf-8") as fh:
        table = read_score_file(fh)
    model = build_model(table)
    params = SolverParams(time_limit=cfg.time_limit, subip_time_limit=cfg.subip_time_limit,
                          gomory=not cfg.no_gomory, k2_cuts=not cfg.no_k2_cuts,
                          heuristics=not cfg.no_heuristics, seed=cfg.seed)
    log.info("%d variables, %d families", table.n, model.num_columns)
    res = solve(model, params)
    st = res.stats
    _write(cfg.output, format_digraph(table.names, res.optimal.digraph, res.optimal.score))
    log.info("proof bound %.6f, %s", res.proof_bound, "optimal" if res.proven else "NOT proven optimal")
    log.info("time %.3fs nodes %d cluster cuts %d k2 cuts %d gomory cuts %d rows %d lp iterations %d",
             st.wall_time, st.nodes, st.cluster_cuts, st.k2_cuts, st.gomory_cuts, st.rows, st.lp_iterations)
    if cfg.dot is not None:
        cfg.dot.write_text(to_dot(table.names, res.optimal.digraph), encoding="utf-8")

    bound = res.proof_bound if math.isfinite(res.proof_bound) else None
    summary = {"score": res.optimal.score, "bound": bound, "proven": res.proven, **st.summary()}
    code = EXIT_OK if res.proven else EXIT_TRUNCATED
    if cfg.verify:
        if table.n > DP_MAX_N:
            log.warning("verification skipped: n = %d exceeds %d", table.n, DP_MAX_N)
        else:
            ref = dp_optimal(table)
            ok = abs(ref.score - res.optimal.score) <= gap_tol(ref.score)
            summary["verified"] = ok
            summary["dp_score"] = ref.score
            if not ok:
                log.error("verification failed: dynamic programming optimum %.6f", ref.score)
                code = EXIT_MISMATCH
    print("SUMMARY " + json.dumps(summary, sort_keys=True, allow_nan=False), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bncut", description="Exact Bayesian network learning by branch-and-cut.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("score", help="compute a pruned BDeu score file from a CSV dataset")
    s.add_argument("input", type=Path)
    s.add_argument("-o", "--output", type=Path)
    s.add_argument("-m", "--max-parents", type=int, default=3)
    s.add_argument("--ess", type=float, default=1.0)

    v = sub.add_parser("solve", help="find an optimal DAG for a score file")
    v.add_argument("input", type=Path)
    v.add_argument("-o", "--output", type=Path)
    v.add_argument("--time-limit", type=float)
    v.add_argument("--subip-time-limit", type=float)
    v.add_argument("--no-gomory", action="store_true")
    v.add_argument("--no-k2-cuts", action="store_true", help="add only 1-cluster cuts")
    v.add_argument("--no-heuristics", action="store_true")
    v.add_argument("--verify", action="store_true", help="compare with dynamic programming (n <= 16)")
    v.add_argument("--dot", type=Path, help="write the DAG in DOT format")
    v.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    opts = {k: v for k, v in vars(args).items() if k != "verbose"}
    try:
        cfg = RunConfig(**opts)
        return run_score(cfg) if cfg.subcommand == "score" else run_solve(cfg)
    except (OSError, FormatError, ValueError) as e:
        log.error("%s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
