"""
Ordering data model: criteria, strategies, backends and the per-step
Hessian-diagonal tables the ordering loop consumes.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, DataError


class Criterion(Enum):
    MIN_VARIANCE = "min-variance"
    MAX_MEAN = "max-mean"


class Strategy(Enum):
    DECIDUOUS = "deciduous-residue"
    DROP_COLUMN = "drop-column"


class Backend(Enum):
    DIFFUSION = "diffusion"
    STEIN = "stein"
    PROBED = "probed"


class ResidueSign(Enum):
    PAPER = "paper"
    CORRECTED = "corrected"

    @property
    def factor(self) -> float:
        return 1.0 if self is ResidueSign.PAPER else -1.0


@dataclass(frozen=True)
class OrderingConfig:
    criterion: Criterion = Criterion.MIN_VARIANCE
    strategy: Strategy = Strategy.DECIDUOUS
    backend: Backend = Backend.DIFFUSION
    residue_sign: ResidueSign = ResidueSign.CORRECTED
    max_eval_samples: Optional[int] = None

    def __post_init__(self):
        for name, enum_type in (
            ("criterion", Criterion),
            ("strategy", Strategy),
            ("backend", Backend),
            ("residue_sign", ResidueSign),
        ):
            value = getattr(self, name)
            if not isinstance(value, enum_type):
                try:
                    object.__setattr__(self, name, enum_type(value))
                except ValueError:
                    choices = [e.value for e in enum_type]
                    raise ConfigError(f"{name} must be one of {choices}, got {value!r}") from None
        if self.strategy is Strategy.DECIDUOUS and self.backend is not Backend.DIFFUSION:
            raise ConfigError("the deciduous-residue strategy needs the diffusion backend")
        if self.max_eval_samples is not None and self.max_eval_samples < 2:
            raise ConfigError("max_eval_samples must be >= 2")

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "strategy": self.strategy.value,
            "backend": self.backend.value,
            "residue_sign": self.residue_sign.value,
            "max_eval_samples": self.max_eval_samples,
        }


@dataclass
class HessianDiagTable:
    """Hessian-diagonal estimates of the remaining nodes at one ordering step"""

    step: int
    nodes: Tuple[int, ...]
    estimates: np.ndarray

    def __post_init__(self):
        self.nodes = tuple(int(n) for n in self.nodes)
        self.estimates = np.asarray(self.estimates, dtype=np.float64)
        if self.estimates.ndim != 2 or self.estimates.shape[1] != len(self.nodes):
            raise DataError(
                f"estimates shape {self.estimates.shape} does not match {len(self.nodes)} nodes"
            )
        if not self.nodes:
            raise DataError("a Hessian table needs at least one remaining node")

    @property
    def variances(self) -> np.ndarray:
        if self.estimates.shape[0] < 2:
            return np.zeros(len(self.nodes))
        return self.estimates.var(axis=0, ddof=1)

    @property
    def means(self) -> np.ndarray:
        return self.estimates.mean(axis=0)

    def rows(self) -> List[dict]:
        return [
            {"step": self.step, "node": node, "variance": float(var), "mean": float(mean)}
            for node, var, mean in zip(self.nodes, self.variances, self.means)
        ]


@dataclass
class CausalOrder:
    """Leaf-removal sequence; the topological order is its reverse"""

    removal: List[int]
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        self.removal = [int(n) for n in self.removal]
        if sorted(self.removal) != list(range(len(self.removal))):
            raise DataError(f"order {self.removal} is not a permutation of 0..{len(self.removal) - 1}")
        if self.names and len(self.names) != len(self.removal):
            raise DataError("order names do not match its length")

    @classmethod
    def from_topological(cls, topological: Sequence[int], names: Sequence[str] = ()) -> "CausalOrder":
        return cls(list(reversed(list(topological))), tuple(names))

    @property
    def topological(self) -> List[int]:
        return list(reversed(self.removal))

    def position(self) -> np.ndarray:
        """position[node] = index of the node in the topological order"""
        pos = np.empty(len(self.removal), dtype=int)
        pos[self.topological] = np.arange(len(self.removal))
        return pos

    def to_dict(self) -> dict:
        names = self.names or tuple(str(i) for i in range(len(self.removal)))
        return {
            "topological_order": [names[i] for i in self.topological],
            "removal_order": [names[i] for i in self.removal],
            "topological_indices": self.topological,
        }

    @classmethod
    def from_dict(cls, payload: dict, names: Sequence[str]) -> "CausalOrder":
        names = list(names)
        try:
            topological = [names.index(n) for n in payload["topological_order"]]
        except (KeyError, ValueError) as e:
            raise DataError(f"order file does not match variable names: {e}") from e
        return cls.from_topological(topological, names)


@dataclass
class OrderingResult:
    order: CausalOrder
    tables: List[HessianDiagTable] = field(default_factory=list)
