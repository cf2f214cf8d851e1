"""
Order-to-DAG pruning by grouped feature selection.

Each node is regressed on a polynomial expansion of its predecessors in the
order; a predecessor keeps its edge when the nested-model F-test on its
group of basis columns rejects at level alpha.
"""

import warnings
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import f as f_dist

from errors import ConfigError, DataError
from logger_config import ordering_logger
from datagen.schema import Dag
from ordering.schema import CausalOrder

RANK_TOL = 1e-10


@dataclass(frozen=True)
class PruneConfig:
    basis_degree: int = 3
    alpha: float = 0.001

    def __post_init__(self):
        if self.basis_degree < 1:
            raise ConfigError(f"basis_degree must be >= 1, got {self.basis_degree}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")

    def to_dict(self) -> dict:
        return asdict(self)


class CollinearBasisWarning(UserWarning):
    pass


def _basis(column: np.ndarray, degree: int) -> np.ndarray:
    std = column.std()
    z = (column - column.mean()) / (std if std > 0 else 1.0)
    return np.column_stack([z**p for p in range(1, degree + 1)])


def _independent_columns(design: np.ndarray) -> np.ndarray:
    """Indices of a maximal independent column set, found by pivoted QR"""
    _, r, pivots = linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return np.array([], dtype=int)
    rank = int(np.sum(diag > RANK_TOL * diag[0]))
    return np.sort(pivots[:rank])


def _rss(design: np.ndarray, target: np.ndarray) -> float:
    coef, *_ = linalg.lstsq(design, target)
    resid = target - design @ coef
    return float(resid @ resid)


def _prune_node(
    target: np.ndarray, predecessors: List[int], values: np.ndarray, cfg: PruneConfig, node_name: str
) -> List[Tuple[int, float]]:
    """(predecessor, p-value) for every predecessor of one node"""
    n = target.shape[0]
    blocks = [np.ones((n, 1))] + [_basis(values[:, p], cfg.basis_degree) for p in predecessors]
    groups = [np.full(1, -1)] + [np.full(cfg.basis_degree, p) for p in predecessors]
    design = np.hstack(blocks)
    owner = np.concatenate(groups)

    keep = _independent_columns(design)
    if keep.size < design.shape[1]:
        warnings.warn(
            f"dropping {design.shape[1] - keep.size} collinear basis columns for node {node_name}",
            CollinearBasisWarning,
        )
        ordering_logger.warning(f"Collinear basis columns dropped for node {node_name}")
        design, owner = design[:, keep], owner[keep]

    dof = n - design.shape[1]
    if dof <= 0:
        raise DataError(f"not enough samples ({n}) to prune node {node_name} with {design.shape[1]} basis columns")
    rss_full = _rss(design, target)
    sigma2 = rss_full / dof

    results = []
    for p in predecessors:
        in_group = owner == p
        q = int(in_group.sum())
        if q == 0:
            results.append((p, 1.0))
            continue
        rss_reduced = _rss(design[:, ~in_group], target)
        if sigma2 <= 0:
            p_value = 0.0 if rss_reduced > 0 else 1.0
        else:
            statistic = max(rss_reduced - rss_full, 0.0) / q / sigma2
            p_value = float(f_dist.sf(statistic, q, dof))
        results.append((p, p_value))
    return results


def prune(order: CausalOrder, dataset, cfg: PruneConfig = PruneConfig()) -> Dag:
    """Edges only run forward along the order, so the result is acyclic"""
    values = dataset.values
    if len(order.removal) != dataset.n_vars:
        raise DataError(f"order covers {len(order.removal)} nodes but dataset has {dataset.n_vars}")

    adjacency = np.zeros((dataset.n_vars, dataset.n_vars), dtype=bool)
    topological = order.topological
    for position, node in enumerate(topological):
        predecessors = topological[:position]
        if not predecessors:
            continue
        for parent, p_value in _prune_node(values[:, node], predecessors, values, cfg, dataset.names[node]):
            if p_value < cfg.alpha:
                adjacency[parent, node] = True
    dag = Dag(adjacency, dataset.names)
    ordering_logger.info(f"Pruned graph keeps {dag.n_edges} edges")
    return dag
