"""
Iterative leaf identification: pick a leaf from the Hessian-diagonal table,
remove it, repeat until one node remains.
"""

from typing import Optional, Sequence

import numpy as np
import pandas as pd

from errors import ScinoError
from logger_config import log_error, log_step, ordering_logger
from ordering.backends import HessianBackend, make_backend
from ordering.schema import CausalOrder, Criterion, HessianDiagTable, OrderingConfig, OrderingResult


def select_leaf(table: HessianDiagTable, criterion: Criterion) -> int:
    """argmin variance or argmax mean; ties go to the smallest node index"""
    criterion = Criterion(criterion)
    order = np.argsort(table.nodes, kind="stable")
    nodes = np.asarray(table.nodes)[order]
    if criterion is Criterion.MIN_VARIANCE:
        return int(nodes[np.argmin(table.variances[order])])
    return int(nodes[np.argmax(table.means[order])])


def order_all(
    dataset,
    cfg: OrderingConfig = OrderingConfig(),
    backend: Optional[HessianBackend] = None,
    **backend_kwargs,
) -> OrderingResult:
    """
    Full causal order plus the D-1 per-step Hessian tables.

    ``backend`` defaults to the one ``cfg`` names (see make_backend);
    extra keyword arguments are forwarded to make_backend.
    """
    if backend is None:
        backend = make_backend(cfg, dataset, **backend_kwargs)

    n_vars = dataset.n_vars
    remaining = list(range(n_vars))
    removed = []
    tables = []
    for step in range(n_vars - 1):
        try:
            table = backend.table(step, remaining, removed)
        except ScinoError as e:
            log_error(type(e).__name__, f"step {step}: {e}", function_name="order_all")
            e.step = step
            raise
        leaf = select_leaf(table, cfg.criterion)
        tables.append(table)
        log_step(step, dataset.names[leaf], f"criterion={cfg.criterion.value} remaining={len(remaining)}")
        removed.append(leaf)
        remaining.remove(leaf)
    removed.extend(remaining)

    order = CausalOrder(removed, dataset.names)
    ordering_logger.info(f"Topological order: {[dataset.names[i] for i in order.topological]}")
    return OrderingResult(order=order, tables=tables)


def random_order(n_vars: int, rng: np.random.Generator, names: Sequence[str] = ()) -> CausalOrder:
    return CausalOrder(list(rng.permutation(n_vars)), tuple(names))


def step_log_frame(tables: Sequence[HessianDiagTable], names: Sequence[str]) -> pd.DataFrame:
    rows = [row for table in tables for row in table.rows()]
    frame = pd.DataFrame(rows, columns=["step", "node", "variance", "mean"])
    frame["node"] = [names[i] for i in frame["node"]]
    return frame


def write_step_log(path: str, tables: Sequence[HessianDiagTable], names: Sequence[str]):
    step_log_frame(tables, names).to_csv(path, index=False, float_format="%.17g")
