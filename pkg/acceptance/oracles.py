"""
Definition-level reference computations for the graph metrics, written
without the d-separation machinery the metrics module uses.
"""

from itertools import permutations, product
from typing import Dict, FrozenSet, Iterator, List, Sequence, Tuple

import numpy as np

from datagen.schema import Dag
from ordering.analytic import linear_gaussian_covariance


def enumerate_dags(n_nodes: int) -> Iterator[Dag]:
    """Every labelled DAG on n_nodes nodes"""
    pairs = [(i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j]
    for bits in product((False, True), repeat=len(pairs)):
        adjacency = np.zeros((n_nodes, n_nodes), dtype=bool)
        for (i, j), on in zip(pairs, bits):
            adjacency[i, j] = on
        if _acyclic(adjacency):
            yield Dag(adjacency)


def _acyclic(adjacency: np.ndarray) -> bool:
    # repeatedly strip nodes without incoming edges
    alive = list(range(adjacency.shape[0]))
    while alive:
        sources = [v for v in alive if not any(adjacency[u, v] for u in alive)]
        if not sources:
            return False
        alive = [v for v in alive if v not in sources]
    return True


def all_orders(n_nodes: int) -> Iterator[Tuple[int, ...]]:
    return permutations(range(n_nodes))


def brute_force_od(topological: Sequence[int], adjacency: np.ndarray) -> int:
    topological = list(topological)
    n = adjacency.shape[0]
    return sum(
        1
        for i in range(n)
        for j in range(n)
        if adjacency[i, j] and topological.index(j) < topological.index(i)
    )


def brute_force_shd(a: np.ndarray, b: np.ndarray) -> int:
    n = a.shape[0]
    return sum(
        1
        for i in range(n)
        for j in range(i + 1, n)
        if (a[i, j], a[j, i]) != (b[i, j], b[j, i])
    )


class RegressionSid:
    """
    SID through linear-Gaussian regression: with generic edge weights an
    adjustment set is valid exactly when the regression coefficient of x_i
    matches the total causal effect of x_i on x_j.
    """

    TOL = 1e-8

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self._models: Dict[bytes, Tuple[np.ndarray, np.ndarray]] = {}
        self._verdicts: Dict[Tuple[bytes, int, int, FrozenSet[int]], bool] = {}

    def _model(self, g: Dag):
        key = g.adjacency.tobytes()
        if key not in self._models:
            n = g.n_nodes
            magnitude = self.rng.uniform(0.5, 1.5, size=(n, n))
            signs = self.rng.choice([-1.0, 1.0], size=(n, n))
            weights = np.where(g.adjacency, magnitude * signs, 0.0)
            covariance = linear_gaussian_covariance(weights)
            total_effect = np.linalg.inv(np.eye(n) - weights)
            self._models[key] = (covariance, total_effect)
        return key, self._models[key]

    def correct(self, g: Dag, i: int, j: int, z: FrozenSet[int]) -> bool:
        key, (covariance, total_effect) = self._model(g)
        cache_key = (key, i, j, z)
        if cache_key not in self._verdicts:
            if j in z:
                estimate = 0.0
            else:
                design = [i] + sorted(z)
                coef = np.linalg.solve(covariance[np.ix_(design, design)], covariance[design, j])
                estimate = coef[0]
            self._verdicts[cache_key] = abs(estimate - total_effect[i, j]) < self.TOL
        return self._verdicts[cache_key]

    def sid(self, g: Dag, g_hat: Dag) -> int:
        n = g.n_nodes
        mistakes = 0
        for i in range(n):
            z = frozenset(int(p) for p in np.flatnonzero(g_hat.adjacency[:, i]))
            mistakes += sum(1 for j in range(n) if j != i and not self.correct(g, i, j, z))
        return mistakes


def dag_list(max_nodes: int) -> List[List[Dag]]:
    """dag_list(k)[n] holds every DAG on n nodes, for 1 <= n <= k"""
    return [[]] + [list(enumerate_dags(n)) for n in range(1, max_nodes + 1)]
