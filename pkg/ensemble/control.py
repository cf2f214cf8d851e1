"""
Posterior-controlled ordering.

At every step the remaining nodes get a posterior weight:

    context node   prior(v) * evidence(v)          (soft supervision)
    other node     evidence(v) / |remaining|       (hard supervision)

The prior is normalized over the remaining nodes first, so a uniform prior
on a context node weighs the same as hard supervision. The argmax is taken
as the next leaf.

The step log keeps the fused evidence factor next to the raw evidence, so
each posterior row can be recomputed from the log.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ensemble.evidence import ci_evidence, rank_evidence, temperature_soften
from ensemble.priors import PriorProvider, UniformPrior
from ensemble.schema import ControlConfig, EvidenceKind
from ensemble.stats import EnsembleStats
from errors import ConfigError, ProviderError, ScinoError
from logger_config import control_logger, log_error, log_step
from ordering.schema import CausalOrder

StatsFn = Callable[[int, List[int], List[int]], EnsembleStats]

LOG_COLUMNS = ["step", "node", "context", "prior", "evidence", "fused_evidence", "posterior", "chosen"]


class DegradedPriorWarning(UserWarning):
    pass


class PosteriorFallbackWarning(UserWarning):
    pass


@dataclass
class ControlResult:
    order: CausalOrder
    log: List[dict] = field(default_factory=list)
    degraded: bool = False

    def log_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.log, columns=LOG_COLUMNS)


def step_evidence(stats: Optional[EnsembleStats], n_remaining: int, kind: EvidenceKind, confidence: float) -> np.ndarray:
    if kind is EvidenceKind.NONE:
        return np.ones(n_remaining)
    if stats is None:
        raise ConfigError(f"{kind.value} evidence needs ensemble statistics")
    if kind is EvidenceKind.RANK:
        return rank_evidence(stats)
    return ci_evidence(stats, confidence)


def _normalized(weights: np.ndarray) -> Optional[np.ndarray]:
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        return None
    return weights / total


def fusion_terms(prior: np.ndarray, evidence: np.ndarray, in_context: np.ndarray, tau: Optional[float] = None):
    """
    Normalized prior and the evidence factor each node enters the posterior
    with: softened evidence on context nodes, evidence / n elsewhere.
    """
    prior = np.asarray(prior, dtype=np.float64)
    evidence = np.asarray(evidence, dtype=np.float64)
    n = len(evidence)
    if prior.shape != evidence.shape or np.any(prior < 0):
        raise ConfigError(f"prior must be {n} nonnegative weights, got {prior.tolist()}")

    prior_n = _normalized(prior)
    if prior_n is None:
        warnings.warn("prior has no mass on the remaining nodes; using a uniform prior", PosteriorFallbackWarning)
        prior_n = np.full(n, 1.0 / n)

    soft = temperature_soften(evidence, tau) if tau is not None else evidence
    return prior_n, np.where(in_context, soft, evidence / n)


def _posterior(prior_n: np.ndarray, fused: np.ndarray, in_context: np.ndarray) -> np.ndarray:
    posterior = _normalized(np.where(in_context, prior_n * fused, fused))
    if posterior is None:
        # evidence vanished on every candidate the prior supports
        control_logger.warning("Posterior has no mass; falling back to the prior alone")
        warnings.warn("posterior has no mass; selecting from the prior alone", PosteriorFallbackWarning)
        posterior = _normalized(np.where(in_context, prior_n, 1.0 / len(fused)))
    return posterior


def fuse_posterior(prior: np.ndarray, evidence: np.ndarray, in_context: np.ndarray, tau: Optional[float] = None) -> np.ndarray:
    """Normalized posterior over the remaining nodes"""
    prior_n, fused = fusion_terms(prior, evidence, in_context, tau)
    return _posterior(prior_n, fused, in_context)


def control_order(
    variables: Sequence[str],
    context_set: Optional[Sequence[str]],
    prior: PriorProvider,
    stats_fn: Optional[StatsFn],
    cfg: ControlConfig = ControlConfig(),
    confidence: float = 0.95,
) -> ControlResult:
    """
    Leaf-by-leaf ordering from fused prior and ensemble evidence.

    ``stats_fn(step, remaining, removed)`` returns fresh ensemble statistics
    for the remaining nodes; it is not called when cfg.evidence is none.
    A failing prior provider is swapped for a uniform one and the result is
    marked degraded.
    """
    names = tuple(variables)
    context = set(names if context_set is None else context_set)
    unknown = context - set(names)
    if unknown:
        raise ConfigError(f"context set names unknown variables {sorted(unknown)}")

    remaining = list(range(len(names)))
    removed: List[int] = []
    log: List[dict] = []
    degraded = False

    for step in range(len(names) - 1):
        nodes = sorted(remaining)
        stats = None
        if cfg.evidence is not EvidenceKind.NONE:
            try:
                stats = stats_fn(step, nodes, list(removed))
            except ScinoError as e:
                log_error(type(e).__name__, f"step {step}: {e}", function_name="control_order")
                e.step = step
                raise
        evidence = step_evidence(stats, len(nodes), cfg.evidence, confidence)

        try:
            weights = prior.prior(step, nodes)
        except ProviderError as e:
            log_error("PROVIDER_ERROR", f"step {step}: {e}", function_name="control_order")
            control_logger.warning("Prior provider failed; continuing with a uniform prior (run degraded)")
            warnings.warn(f"prior provider failed at step {step}: {e}", DegradedPriorWarning)
            prior = UniformPrior()
            degraded = True
            weights = prior.prior(step, nodes)

        in_context = np.array([names[n] in context for n in nodes])
        prior_n, fused = fusion_terms(weights, evidence, in_context, cfg.tau)
        posterior = _posterior(prior_n, fused, in_context)
        leaf = nodes[int(np.argmax(posterior))]
        for k, node in enumerate(nodes):
            log.append({
                "step": step,
                "node": names[node],
                "context": bool(in_context[k]),
                "prior": float(prior_n[k]),
                "evidence": float(evidence[k]),
                "fused_evidence": float(fused[k]),
                "posterior": float(posterior[k]),
                "chosen": node == leaf,
            })
        log_step(step, names[leaf], f"posterior={posterior.max():.4f} evidence={cfg.evidence.value}")
        removed.append(leaf)
        remaining.remove(leaf)
    removed.extend(remaining)

    order = CausalOrder(removed, names)
    control_logger.info(f"Controlled order: {[names[i] for i in order.topological]} degraded={degraded}")
    return ControlResult(order=order, log=log, degraded=degraded)


def write_posterior_log(path: str, result: ControlResult):
    result.log_frame().to_csv(path, index=False, float_format="%.17g")
