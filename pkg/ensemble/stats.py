"""
Deep-ensemble spread statistics over the remaining nodes of one step.

sigma[m, i] is the sample standard deviation of node i's Hessian-diagonal
estimates under member m.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm, rankdata

from errors import DataError, ScinoError
from logger_config import control_logger, log_error


@dataclass
class EnsembleStats:
    sigmas: np.ndarray
    nodes: Tuple[int, ...]

    def __post_init__(self):
        self.sigmas = np.atleast_2d(np.asarray(self.sigmas, dtype=np.float64))
        self.nodes = tuple(int(n) for n in self.nodes)
        if self.sigmas.shape[1] != len(self.nodes):
            raise DataError(f"sigmas shape {self.sigmas.shape} does not match {len(self.nodes)} nodes")
        if self.sigmas.shape[0] < 1:
            raise DataError("ensemble statistics need at least one member")

    @property
    def n_members(self) -> int:
        return int(self.sigmas.shape[0])

    @property
    def ranks(self) -> np.ndarray:
        """Per-member ranks 1..|remaining|; ties resolve to the smaller node index"""
        return rankdata(self.sigmas, method="ordinal", axis=1).astype(float)

    @property
    def average_ranks(self) -> np.ndarray:
        return self.ranks.mean(axis=0)

    def ci_bounds(self, confidence: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
        """Normal CI on the mean over members of sigma^2"""
        if self.n_members < 2:
            raise DataError("a confidence interval over the ensemble needs at least 2 members")
        if not 0.0 < confidence < 1.0:
            raise DataError(f"confidence must lie in (0, 1), got {confidence}")
        variances = self.sigmas**2
        mean = variances.mean(axis=0)
        half = norm.ppf(0.5 + confidence / 2.0) * variances.std(axis=0, ddof=1) / np.sqrt(self.n_members)
        return mean - half, mean + half

    @property
    def member_minimizers(self) -> np.ndarray:
        """Column index of each member's smallest sigma"""
        return np.argmin(self.sigmas, axis=1)


def _member_sigma(m: int, backend, step: int, nodes: Sequence[int], removed: Sequence[int]) -> np.ndarray:
    try:
        table = backend.table(step, nodes, removed)
    except ScinoError as e:
        log_error(type(e).__name__, f"ensemble member {m}: {e}", function_name="ensemble_sigmas")
        e.member = m
        raise
    return np.sqrt(table.variances)


def ensemble_sigmas(
    members: Sequence, remaining: Sequence[int], removed: Sequence[int] = (), step: int = 0, jobs: int = 1
) -> EnsembleStats:
    """One Hessian table per member backend, reduced to sigma per node; ``jobs`` members run at once"""
    if not members:
        raise DataError("ensemble needs at least one member")
    nodes = sorted(remaining)
    rows = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_member_sigma)(m, backend, step, nodes, removed) for m, backend in enumerate(members)
    )
    stats = EnsembleStats(np.vstack(rows), nodes)
    control_logger.info(f"Ensemble step {step}: M={stats.n_members} remaining={len(nodes)}")
    return stats
