"""
Prior providers for the control loop.

Every provider returns nonnegative weights over the sorted remaining node
indices for one step; the control loop normalizes them.
"""

from typing import Dict, List, Mapping, Optional, Protocol, Sequence

import numpy as np

from context.role_context import VariableContext, build_leaf_prompt
from datagen.schema import Dag
from ensemble.evidence import length_normalized_prior
from ensemble.schema import PriorKind
from errors import ConfigError, DataError, ProviderError
from llm_utils import PriorClient, parse_candidate_logprobs
from logger_config import control_logger
from utils.json_utils import load_json


class PriorProvider(Protocol):
    kind: PriorKind

    def prior(self, step: int, remaining: Sequence[int]) -> np.ndarray: ...


class UniformPrior:
    kind = PriorKind.UNIFORM

    def prior(self, step, remaining) -> np.ndarray:
        return np.ones(len(remaining))


class TablePrior:
    """Precomputed per-step weights: ``steps[k][name]``; unlisted names get 0"""

    kind = PriorKind.TABLE

    def __init__(self, steps: Sequence[Mapping[str, float]], names: Sequence[str]):
        self.steps = [dict(s) for s in steps]
        self.names = tuple(names)
        for k, row in enumerate(self.steps):
            if any(float(v) < 0 for v in row.values()):
                raise DataError(f"prior table step {k} has negative weights")
            unknown = set(row) - set(self.names)
            if unknown:
                raise DataError(f"prior table step {k} names unknown variables {sorted(unknown)}")

    @classmethod
    def from_json(cls, path: str, names: Sequence[str]) -> "TablePrior":
        payload = load_json(path)
        steps = payload.get("steps") if isinstance(payload, dict) else payload
        if not isinstance(steps, list):
            raise DataError(f"{path}: expected a list of per-step weight objects")
        return cls(steps, names)

    def prior(self, step, remaining) -> np.ndarray:
        if step >= len(self.steps):
            raise DataError(f"prior table has {len(self.steps)} steps, step {step} requested")
        row = self.steps[step]
        return np.array([float(row.get(self.names[i], 0.0)) for i in sorted(remaining)])


class OraclePrior:
    """Point mass on the smallest-index true leaf among the remaining nodes"""

    kind = PriorKind.ORACLE

    def __init__(self, dag: Dag):
        self.dag = dag

    def prior(self, step, remaining) -> np.ndarray:
        nodes = sorted(remaining)
        leaf = self.dag.leaves(nodes)[0]
        return np.array([1.0 if n == leaf else 0.0 for n in nodes])


def _weights_from_response(response: dict, candidates: Sequence[str], alpha: float) -> np.ndarray:
    logprobs = parse_candidate_logprobs(response, candidates)
    return np.array([length_normalized_prior(logprobs[c], alpha) for c in candidates])


class RemotePrior:
    """
    Leaf-selection prompt sent to a token-logprob endpoint.

    ``aliases`` replaces variable names in the prompt (masked studies);
    every raw response is kept in ``responses`` for replay.
    """

    kind = PriorKind.REMOTE

    def __init__(
        self,
        client: PriorClient,
        names: Sequence[str],
        context: Optional[VariableContext] = None,
        alpha: float = 1.0,
        aliases: Optional[Dict[str, str]] = None,
    ):
        self.client = client
        self.names = tuple(names)
        self.context = context or VariableContext()
        self.alpha = alpha
        self.aliases = dict(aliases or {})
        self.responses: List[dict] = []

    def _candidates(self, remaining: Sequence[int]) -> List[str]:
        return [self.aliases.get(self.names[i], self.names[i]) for i in sorted(remaining)]

    def prior(self, step, remaining) -> np.ndarray:
        candidates = self._candidates(remaining)
        prompt = build_leaf_prompt(candidates, self.context.renamed(self.aliases))
        response = self.client.request(prompt, candidates)
        self.responses.append({"step": step, "prompt": prompt, "candidates": candidates, "response": response})
        weights = _weights_from_response(response, candidates, self.alpha)
        control_logger.info(f"Remote prior step {step}: {len(candidates)} candidates")
        return weights


class ReplayPrior:
    """Reads responses persisted by a RemotePrior run"""

    kind = PriorKind.REPLAY

    def __init__(self, records: Sequence[dict], names: Sequence[str], alpha: float = 1.0,
                 aliases: Optional[Dict[str, str]] = None):
        self.records = {int(r["step"]): r for r in records}
        self.names = tuple(names)
        self.alpha = alpha
        self.aliases = dict(aliases or {})

    @classmethod
    def from_json(cls, path: str, names: Sequence[str], alpha: float = 1.0) -> "ReplayPrior":
        payload = load_json(path)
        if not isinstance(payload, dict) or "records" not in payload:
            raise DataError(f"{path}: not a persisted provider-response file")
        return cls(payload["records"], names, alpha, payload.get("aliases"))

    def prior(self, step, remaining) -> np.ndarray:
        if step not in self.records:
            raise ProviderError(f"no recorded provider response for step {step}")
        record = self.records[step]
        candidates = [self.aliases.get(self.names[i], self.names[i]) for i in sorted(remaining)]
        if list(record.get("candidates", candidates)) != candidates:
            raise ProviderError(f"recorded candidates at step {step} differ from the remaining variables")
        return _weights_from_response(record["response"], candidates, self.alpha)


def make_prior(
    kind: PriorKind,
    names: Sequence[str],
    alpha: float = 1.0,
    table_path: Optional[str] = None,
    truth: Optional[Dag] = None,
    client: Optional[PriorClient] = None,
    context: Optional[VariableContext] = None,
    aliases: Optional[Dict[str, str]] = None,
    replay_path: Optional[str] = None,
) -> PriorProvider:
    kind = PriorKind(kind)
    if kind is PriorKind.UNIFORM:
        return UniformPrior()
    if kind is PriorKind.TABLE:
        if not table_path:
            raise ConfigError("the table prior needs a prior table file")
        return TablePrior.from_json(table_path, names)
    if kind is PriorKind.ORACLE:
        if truth is None:
            raise ConfigError("the oracle prior needs a ground-truth graph")
        return OraclePrior(truth)
    if kind is PriorKind.REPLAY:
        if not replay_path:
            raise ConfigError("the replay prior needs a provider-response file")
        return ReplayPrior.from_json(replay_path, names, alpha)
    return RemotePrior(client or PriorClient(), names, context, alpha, aliases)
