from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from errors import ConfigError

MAX_TAU = 5.0


class EvidenceKind(Enum):
    RANK = "rank"
    CI = "ci"
    NONE = "none"


class PriorKind(Enum):
    UNIFORM = "uniform"
    TABLE = "table"
    ORACLE = "oracle"
    REMOTE = "remote"
    REPLAY = "replay"


class EnsembleMode(Enum):
    PROBED = "probed"
    INDEPENDENT = "independent"


def _coerce(obj, name: str, enum_type):
    value = getattr(obj, name)
    if isinstance(value, enum_type):
        return
    try:
        object.__setattr__(obj, name, enum_type(value))
    except ValueError:
        choices = [e.value for e in enum_type]
        raise ConfigError(f"{name} must be one of {choices}, got {value!r}") from None


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int = 8
    mode: EnsembleMode = EnsembleMode.PROBED
    confidence: float = 0.95
    jobs: int = 1

    def __post_init__(self):
        _coerce(self, "mode", EnsembleMode)
        if self.n_members < 1:
            raise ConfigError("n_members must be >= 1")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError(f"confidence must lie in (0, 1), got {self.confidence}")
        if self.jobs == 0:
            raise ConfigError("jobs must be nonzero (-1 uses every core)")

    def to_dict(self) -> dict:
        return {"n_members": self.n_members, "mode": self.mode.value, "confidence": self.confidence, "jobs": self.jobs}


@dataclass(frozen=True)
class ControlConfig:
    """
    evidence      rank | ci | none (none fuses the prior alone)
    tau           softens context-node evidence when set, 0 <= tau <= 5
    context_set   names that carry a prior; None means every variable
    alpha         token length-normalization exponent for remote priors
    """

    evidence: EvidenceKind = EvidenceKind.RANK
    tau: Optional[float] = None
    context_set: Optional[Tuple[str, ...]] = None
    prior: PriorKind = PriorKind.UNIFORM
    alpha: float = 1.0

    def __post_init__(self):
        _coerce(self, "evidence", EvidenceKind)
        _coerce(self, "prior", PriorKind)
        if self.tau is not None and not 0.0 <= self.tau <= MAX_TAU:
            raise ConfigError(f"tau must lie in [0, {MAX_TAU}], got {self.tau}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.context_set is not None:
            object.__setattr__(self, "context_set", tuple(self.context_set))

    def to_dict(self) -> dict:
        return {
            "evidence": self.evidence.value,
            "tau": self.tau,
            "context_set": list(self.context_set) if self.context_set is not None else None,
            "prior": self.prior.value,
            "alpha": self.alpha,
        }
