"""
Core data types: Dag (ground truth and predicted graphs) and Dataset
(N x D observational samples with column names).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from errors import DataError


def default_names(n_vars: int) -> Tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n_vars))


def _check_names(names: Sequence[str], expected: int, what: str):
    if len(names) != expected:
        raise DataError(f"{what} has {expected} columns but {len(names)} names")
    seen = set()
    duplicates = [n for n in names if n in seen or seen.add(n)]
    if duplicates:
        raise DataError(f"duplicate {what} names: {sorted(set(duplicates))}")


@dataclass(frozen=True, eq=False)
class Dag:
    """A[i, j] = True encodes the edge i -> j"""

    adjacency: np.ndarray
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        adjacency = np.asarray(self.adjacency, dtype=bool)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise DataError(f"adjacency must be square, got shape {adjacency.shape}")
        if np.any(np.diag(adjacency)):
            raise DataError("self-loops are not allowed")
        object.__setattr__(self, "adjacency", adjacency)
        names = tuple(self.names) if self.names else default_names(adjacency.shape[0])
        _check_names(names, adjacency.shape[0], "graph")
        object.__setattr__(self, "names", names)
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise DataError("graph contains a directed cycle")

    @classmethod
    def from_edges(cls, n_nodes: int, edges, names: Sequence[str] = ()) -> "Dag":
        adjacency = np.zeros((n_nodes, n_nodes), dtype=bool)
        for i, j in edges:
            adjacency[i, j] = True
        return cls(adjacency, tuple(names))

    @classmethod
    def empty(cls, n_nodes: int, names: Sequence[str] = ()) -> "Dag":
        return cls(np.zeros((n_nodes, n_nodes), dtype=bool), tuple(names))

    @property
    def n_nodes(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def parents(self, node: int) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.adjacency[:, node])]

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.adjacency.shape[0]))
        graph.add_edges_from(zip(*np.nonzero(self.adjacency)))
        return graph

    def topological_order(self) -> List[int]:
        # lexicographic so ties resolve to the smallest index
        return [int(n) for n in nx.lexicographical_topological_sort(self.to_networkx())]

    def leaves(self, remaining: Optional[Sequence[int]] = None) -> List[int]:
        """Nodes with no child inside ``remaining`` (default: all nodes)"""
        nodes = list(range(self.n_nodes)) if remaining is None else sorted(remaining)
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[nodes] = True
        return [n for n in nodes if not np.any(self.adjacency[n] & mask)]


@dataclass(frozen=True, eq=False)
class Dataset:
    values: np.ndarray
    names: Tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"dataset must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("dataset contains NaN or infinite values")
        object.__setattr__(self, "values", values)
        names = tuple(self.names) if self.names else default_names(values.shape[1])
        _check_names(names, values.shape[1], "dataset")
        object.__setattr__(self, "names", names)

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_vars(self) -> int:
        return int(self.values.shape[1])

    def column_stats(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-column mean and population std; constant columns get std 1"""
        if self.n_samples == 0:
            return np.zeros(self.n_vars), np.ones(self.n_vars)
        mean = self.values.mean(axis=0)
        std = self.values.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return mean, std

    def standardized(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        mean, std = self.column_stats()
        return (self.values - mean) / std, mean, std

    def select(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return Dataset(self.values[:, columns], tuple(self.names[c] for c in columns), dict(self.metadata))

    def head(self, n_rows: int) -> "Dataset":
        return Dataset(self.values[:n_rows], self.names, dict(self.metadata))
