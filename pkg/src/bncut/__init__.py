"""Exact Bayesian network structure learning by branch-and-cut over family variables."""

from .ip_model import Digraph, IpModel, LinearConstraint, build_model, cluster_row, extract_digraph, is_acyclic
from .lp import LpEngine, LpSolution, solve_relaxation
from .oracle import brute_force_optimal, dp_optimal
from .scores import Dataset, LocalScoreTable, bdeu_local_score, enumerate_scores, prune, read_dataset, read_score_file, write_score_file
from .solver import SolverParams, SolveResult, solve

__all__ = [
    "Dataset", "Digraph", "IpModel", "LinearConstraint", "LocalScoreTable", "LpEngine", "LpSolution",
    "SolveResult", "SolverParams", "bdeu_local_score", "brute_force_optimal", "build_model", "cluster_row",
    "dp_optimal", "enumerate_scores", "extract_digraph", "is_acyclic", "prune", "read_dataset",
    "read_score_file", "solve", "solve_relaxation", "write_score_file",
]
