"""
Effective run configuration: defaults, then a JSON file, then CLI flags.

File layout (every key optional):

    {
      "seed": 0, "output_dir": "runs/latest", "overwrite": false, "jobs": 1,
      "generate": {...GenConfig}, "network": {...NetworkConfig},
      "train": {...TrainConfig}, "stein": {...SteinConfig},
      "ordering": {...OrderingConfig}, "prune": {...PruneConfig},
      "ensemble": {...EnsembleConfig}, "control": {...ControlConfig}
    }

The root seed replaces the section seeds of generate and train.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional

from datagen.generators import GenConfig
from diffusion.trainer import TrainConfig
from ensemble.schema import ControlConfig, EnsembleConfig
from errors import ConfigError
from ordering.pruning import PruneConfig
from ordering.schema import OrderingConfig
from scino.hyperparams import HyperParams
from stein.estimator import SteinConfig
from utils.json_utils import canonical_hash, load_json

PROFILES = ("desk", "synthetic", "real")


@dataclass(frozen=True)
class NetworkConfig:
    """desk widths for CPU runs, or the full-scale synthetic/real profiles"""

    profile: str = "desk"
    hidden: int = 64
    n_layers: int = 2
    dropout_rate: float = 0.2

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"network profile must be one of {PROFILES}, got {self.profile!r}")

    def hyperparams(self, n_vars: int) -> HyperParams:
        if self.profile == "desk":
            return HyperParams.desk(n_vars, self.hidden, self.n_layers, dropout_rate=self.dropout_rate)
        return HyperParams.full_scale(n_vars, self.profile)


SECTIONS = {
    "generate": GenConfig,
    "network": NetworkConfig,
    "train": TrainConfig,
    "stein": SteinConfig,
    "ordering": OrderingConfig,
    "prune": PruneConfig,
    "ensemble": EnsembleConfig,
    "control": ControlConfig,
}

# flat CLI flag -> (section, field)
FLAG_FIELDS = {
    "n_samples": ("generate", "n_samples"),
    "n_nodes": ("generate", "n_nodes"),
    "mechanism": ("generate", "mechanism"),
    "epochs": ("train", "epochs"),
    "batch_size": ("train", "batch_size"),
    "criterion": ("ordering", "criterion"),
    "strategy": ("ordering", "strategy"),
    "backend": ("ordering", "backend"),
    "residue_sign": ("ordering", "residue_sign"),
    "max_eval_samples": ("ordering", "max_eval_samples"),
    "alpha_prune": ("prune", "alpha"),
    "members": ("ensemble", "n_members"),
    "ensemble_mode": ("ensemble", "mode"),
    "evidence": ("control", "evidence"),
    "tau": ("control", "tau"),
    "prior": ("control", "prior"),
    "alpha": ("control", "alpha"),
}
TOP_LEVEL = ("seed", "output_dir", "overwrite", "jobs")


def _section_dict(cfg) -> dict:
    if hasattr(cfg, "to_dict"):
        return cfg.to_dict()
    return asdict(cfg)


def _build_section(name: str, values: Dict[str, Any]):
    cls = SECTIONS[name]
    if not isinstance(values, dict):
        raise ConfigError(f"section '{name}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in section '{name}': {sorted(unknown)}")
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"section '{name}': {e}") from e


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "runs/latest"
    overwrite: bool = False
    jobs: int = 1
    generate: GenConfig = field(default_factory=GenConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    stein: SteinConfig = field(default_factory=SteinConfig)
    ordering: OrderingConfig = field(default_factory=OrderingConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    control: ControlConfig = field(default_factory=ControlConfig)

    def __post_init__(self):
        if self.jobs == 0:
            raise ConfigError("jobs must be nonzero (-1 uses every core)")
        object.__setattr__(self, "generate", replace(self.generate, seed=self.seed))
        object.__setattr__(self, "train", replace(self.train, seed=self.seed))
        object.__setattr__(self, "ensemble", replace(self.ensemble, jobs=self.jobs))

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "RunConfig":
        if not isinstance(payload, dict):
            raise ConfigError("run config must be a JSON object")
        unknown = set(payload) - set(TOP_LEVEL) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        kwargs = {k: payload[k] for k in TOP_LEVEL if k in payload}
        for name in SECTIONS:
            if name in payload:
                kwargs[name] = _build_section(name, payload[name])
        return cls(**kwargs)

    def with_overrides(self, **flags) -> "RunConfig":
        """Apply CLI flags; None means "not given". Keys are TOP_LEVEL names,
        FLAG_FIELDS names, or "section.field"."""
        payload = self.to_dict()
        for key, value in flags.items():
            if value is None:
                continue
            if key in TOP_LEVEL:
                payload[key] = value
                continue
            if key in FLAG_FIELDS:
                section, name = FLAG_FIELDS[key]
            elif "." in key:
                section, name = key.split(".", 1)
            else:
                raise ConfigError(f"unknown override '{key}'")
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section '{section}'")
            payload[section][name] = value
        return RunConfig.from_dict(payload)

    def hyperparams(self, n_vars: int) -> HyperParams:
        return self.network.hyperparams(n_vars)

    def to_dict(self) -> dict:
        payload = {k: getattr(self, k) for k in TOP_LEVEL}
        for name in SECTIONS:
            payload[name] = _section_dict(getattr(self, name))
        return payload

    def config_hash(self) -> str:
        return canonical_hash(self.to_dict())


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """Defaults when ``path`` is None"""
    if path is None:
        return RunConfig()
    return RunConfig.from_dict(load_json(path))
