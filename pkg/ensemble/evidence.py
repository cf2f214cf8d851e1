from typing import Sequence

import numpy as np
from scipy.special import softmax

from ensemble.stats import EnsembleStats
from errors import ConfigError, DataError


def rank_evidence(stats: EnsembleStats) -> np.ndarray:
    """softmax(-average rank) over the remaining nodes"""
    return softmax(-stats.average_ranks)


def ci_evidence(stats: EnsembleStats, confidence: float = 0.95) -> np.ndarray:
    """
    Share of members m for which node i's lower bound does not exceed the
    upper bound of member m's minimizer.
    """
    lower, upper = stats.ci_bounds(confidence)
    minimizer_upper = upper[stats.member_minimizers]
    return (lower[:, None] <= minimizer_upper[None, :]).mean(axis=1)


def length_normalized_prior(token_logprobs: Sequence[float], alpha: float = 1.0) -> float:
    """exp(sum log p / n^alpha)"""
    logprobs = np.asarray(token_logprobs, dtype=np.float64)
    if logprobs.size == 0:
        raise DataError("length normalization needs at least one token")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    return float(np.exp(logprobs.sum() / logprobs.size**alpha))


def temperature_soften(evidence: Sequence[float], tau: float) -> np.ndarray:
    """softmax(evidence ** tau)"""
    if tau < 0:
        raise ConfigError(f"tau must be >= 0, got {tau}")
    return softmax(np.power(np.asarray(evidence, dtype=np.float64), tau))
