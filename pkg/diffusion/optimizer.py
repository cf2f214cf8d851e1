from typing import Dict, Iterable, Optional

import numpy as np

from diffcore.tape import GradientRecord


class Adam:
    """Adaptive-moment optimizer updating parameter arrays in place"""

    def __init__(
        self,
        params: Dict[str, np.ndarray],
        lr: float = 1e-3,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
        names: Optional[Iterable[str]] = None,
    ):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.names = list(names) if names is not None else list(params)
        self.m = {name: np.zeros_like(params[name]) for name in self.names}
        self.v = {name: np.zeros_like(params[name]) for name in self.names}
        self.step_count = 0

    def step(self, grads: GradientRecord):
        self.step_count += 1
        bias1 = 1.0 - self.beta1**self.step_count
        bias2 = 1.0 - self.beta2**self.step_count
        for name in self.names:
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            self.params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
