"""A small hand-specified binary network and a forward sampler for it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ip_model import Digraph, topological_order
from .scores import Dataset


@dataclass
class DiscreteBN:
    names: list[str]
    digraph: Digraph
    # cpts[u][config] = probability of each value of u; config indexes parent values
    # in mixed radix over sorted parents (first parent most significant)
    cpts: list[np.ndarray]
    arities: list[int]

    def sample(self, num_rows: int, rng: np.random.Generator) -> Dataset:
        n = len(self.names)
        rows = np.zeros((num_rows, n), dtype=np.int64)
        for u in topological_order(self.digraph):
            config = np.zeros(num_rows, dtype=np.int64)
            for p in self.digraph.parents[u]:
                config = config * self.arities[p] + rows[:, p]
            cum = np.cumsum(self.cpts[u][config], axis=1)
            draw = rng.random(num_rows)[:, None]
            rows[:, u] = np.minimum((draw > cum).sum(axis=1), self.arities[u] - 1)
        return Dataset(list(self.names), list(self.arities), rows)


def _binary(p_true) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p_true, dtype=float))
    return np.stack([1.0 - p, p], axis=1)


def asia_like() -> DiscreteBN:
    """Eight binary variables wired like the classic chest-clinic example."""
    names = ["asia", "tub", "smoke", "lung", "bronc", "either", "xray", "dysp"]
    ix = {v: i for i, v in enumerate(names)}
    parents = {
        "asia": (), "tub": ("asia",), "smoke": (), "lung": ("smoke",),
        "bronc": ("smoke",), "either": ("lung", "tub"), "xray": ("either",),
        "dysp": ("bronc", "either"),
    }
    # probability of value 1 per parent configuration
    p1 = {
        "asia": [0.01],
        "tub": [0.01, 0.05],
        "smoke": [0.5],
        "lung": [0.01, 0.1],
        "bronc": [0.3, 0.6],
        "either": [0.0, 1.0, 1.0, 1.0],
        "xray": [0.05, 0.98],
        "dysp": [0.1, 0.7, 0.8, 0.9],
    }
    pa = tuple(tuple(sorted(ix[p] for p in parents[v])) for v in names)
    return DiscreteBN(names, Digraph(pa), [_binary(p1[v]) for v in names], [2] * len(names))
