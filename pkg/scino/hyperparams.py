from dataclasses import asdict, dataclass

from errors import ConfigError


@dataclass(frozen=True)
class HyperParams:
    """Shape of a SciNO score network"""

    n_vars: int
    hidden: int
    final_hidden: int
    fourier_features: int = 32
    lte_hidden: int = 128
    n_layers: int = 10
    dropout_rate: float = 0.2
    leaky_slope: float = 0.01

    def __post_init__(self):
        for name in ("n_vars", "hidden", "final_hidden", "fourier_features", "lte_hidden", "n_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"HyperParams.{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @classmethod
    def full_scale(cls, n_vars: int, profile: str = "synthetic") -> "HyperParams":
        """Widths H = max(1024, 5D), S = max(128, 3D); 10 layers for synthetic data, 1 for real data"""
        if profile not in ("synthetic", "real"):
            raise ConfigError(f"unknown profile '{profile}'")
        return cls(
            n_vars=n_vars,
            hidden=max(1024, 5 * n_vars),
            final_hidden=max(128, 3 * n_vars),
            n_layers=10 if profile == "synthetic" else 1,
        )

    @classmethod
    def desk(cls, n_vars: int, hidden: int = 64, n_layers: int = 2, **overrides) -> "HyperParams":
        """Shrunk widths for CPU runs; H and S scale down together"""
        final_hidden = overrides.pop("final_hidden", max(hidden // 2, 3 * n_vars))
        lte_hidden = overrides.pop("lte_hidden", hidden)
        return cls(
            n_vars=n_vars,
            hidden=hidden,
            final_hidden=final_hidden,
            lte_hidden=lte_hidden,
            n_layers=n_layers,
            **overrides,
        )

    def with_vars(self, n_vars: int) -> "HyperParams":
        values = asdict(self)
        values["n_vars"] = n_vars
        return HyperParams(**values)

    def to_dict(self) -> dict:
        return asdict(self)
