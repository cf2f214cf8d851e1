"""
Order divergence, structural Hamming distance, structural intervention
distance, and the cumulative order-divergence curve.
"""

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import FrozenSet, List, Optional, Set

import networkx as nx
import numpy as np

from datagen.schema import Dag
from errors import DataError
from ordering.schema import CausalOrder

try:
    _is_d_separator = nx.is_d_separator
except AttributeError:  # networkx < 3.3
    _is_d_separator = nx.d_separated


@dataclass
class MetricReport:
    od: int
    shd: Optional[int] = None
    sid: Optional[int] = None
    cumulative_od: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _check_names(a, b, what: str):
    if a and b and tuple(a) != tuple(b):
        raise DataError(f"{what}: node names differ ({list(a)} vs {list(b)})")


def _check_order(order: CausalOrder, g: Dag):
    if len(order.removal) != g.n_nodes:
        raise DataError(f"order covers {len(order.removal)} nodes, graph has {g.n_nodes}")
    _check_names(order.names, g.names, "order vs graph")


def _check_graphs(g: Dag, g_hat: Dag):
    if g.n_nodes != g_hat.n_nodes:
        raise DataError(f"graphs have {g.n_nodes} and {g_hat.n_nodes} nodes")
    _check_names(g.names, g_hat.names, "graph vs graph")


def order_divergence(order: CausalOrder, g: Dag) -> int:
    """Edges i -> j of g with j placed before i in the topological order"""
    _check_order(order, g)
    pos = order.position()
    return int(sum(1 for i, j in g.edges() if pos[i] > pos[j]))


def cumulative_od(order: CausalOrder, g: Dag) -> List[int]:
    """Running violation count in leaf-removal order; one entry per removed node"""
    _check_order(order, g)
    remaining = np.ones(g.n_nodes, dtype=bool)
    series, total = [], 0
    for leaf in order.removal:
        remaining[leaf] = False
        total += int(np.sum(g.adjacency[leaf] & remaining))
        series.append(total)
    return series


def shd(g: Dag, g_hat: Dag) -> int:
    """Unordered pairs whose edge type differs; a reversal counts once"""
    _check_graphs(g, g_hat)
    a, b = g.adjacency, g_hat.adjacency
    differs = (a != b) | (a.T != b.T)
    return int(np.triu(differs, k=1).sum())


def _valid_adjustment(graph: nx.DiGraph, i: int, j: int, z: Set[int]) -> bool:
    """Whether z adjusts for the total effect of do(x_i) on x_j in graph"""
    descendants_i = nx.descendants(graph, i)
    if j in z:
        # the estimate is "no effect", right iff j is not downstream of i
        return j not in descendants_i

    on_paths = descendants_i & (nx.ancestors(graph, j) | {j})
    forbidden: Set[int] = set()
    for w in on_paths:
        forbidden |= nx.descendants(graph, w) | {w}
    if z & forbidden:
        return False

    pruned = graph.copy()
    pruned.remove_edges_from([(i, w) for w in on_paths if pruned.has_edge(i, w)])
    return bool(_is_d_separator(pruned, {i}, {j}, set(z)))


@lru_cache(maxsize=1 << 16)
def _valid_adjustment_cached(adjacency_bytes: bytes, n_nodes: int, i: int, j: int, z: FrozenSet[int]) -> bool:
    adjacency = np.frombuffer(adjacency_bytes, dtype=bool).reshape(n_nodes, n_nodes)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n_nodes))
    graph.add_edges_from((int(a), int(b)) for a, b in zip(*np.nonzero(adjacency)))
    return _valid_adjustment(graph, i, j, set(z))


def sid(g: Dag, g_hat: Dag) -> int:
    """Ordered pairs (i, j) where Pa_ghat(i) is not a valid adjustment set in g"""
    _check_graphs(g, g_hat)
    key = np.ascontiguousarray(g.adjacency, dtype=bool).tobytes()
    mistakes = 0
    for i in range(g.n_nodes):
        z = frozenset(g_hat.parents(i))
        for j in range(g.n_nodes):
            if j != i and not _valid_adjustment_cached(key, g.n_nodes, i, j, z):
                mistakes += 1
    return mistakes


def evaluate(order: CausalOrder, g: Dag, g_hat: Optional[Dag] = None) -> MetricReport:
    report = MetricReport(od=order_divergence(order, g), cumulative_od=cumulative_od(order, g))
    if g_hat is not None:
        report.shd = shd(g, g_hat)
        report.sid = sid(g, g_hat)
    return report
