from dataclasses import dataclass

import numpy as np

from errors import ConfigError


@dataclass(frozen=True)
class NoiseSchedule:
    """Discrete forward-noising schedule; steps are 1-based (1..T)"""

    betas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        if self.betas.ndim != 1 or self.betas.size == 0:
            raise ConfigError("schedule needs a non-empty 1-D beta array")
        if np.any(self.betas <= 0) or np.any(self.betas >= 1):
            raise ConfigError("every beta must lie in (0, 1)")
        if np.any(np.diff(self.alpha_bars) >= 0):
            raise ConfigError("alpha_bar must be strictly decreasing")

    @classmethod
    def linear(cls, n_steps: int = 100, beta_start: float = 1e-4, beta_end: float = 0.02) -> "NoiseSchedule":
        if n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
        betas = np.linspace(beta_start, beta_end, n_steps)
        return cls(betas=betas, alpha_bars=np.cumprod(1.0 - betas))

    @property
    def n_steps(self) -> int:
        return int(self.betas.size)

    def alpha_bar(self, t) -> np.ndarray:
        t = np.asarray(t)
        if np.any(t < 1) or np.any(t > self.n_steps):
            raise ConfigError(f"diffusion step out of range 1..{self.n_steps}")
        return self.alpha_bars[t - 1]

    def noise_std(self, t) -> np.ndarray:
        return np.sqrt(1.0 - self.alpha_bar(t))

    def time_input(self, t) -> np.ndarray:
        """Network time input t / T in (0, 1]"""
        return np.asarray(t, dtype=np.float64) / self.n_steps

    def perturb(self, x0: np.ndarray, t, eps: np.ndarray) -> np.ndarray:
        """sqrt(abar_t) x0 + sqrt(1 - abar_t) eps; t may be one step per row"""
        abar = self.alpha_bar(t)
        if abar.ndim == 1 and np.ndim(x0) == 2:
            abar = abar[:, None]
        return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps

    def to_dict(self) -> dict:
        return {"betas": self.betas.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "NoiseSchedule":
        betas = np.asarray(payload["betas"], dtype=np.float64)
        return cls(betas=betas, alpha_bars=np.cumprod(1.0 - betas))
