"""
SciNO score network.

    x --MLP_init--> X^1 --[Fourier layer] x L--> X^{L+1} --MLP_final--> R^D

Each Fourier layer moves the hidden state into the spectral domain, scales
both the real and imaginary parts by the learnable time encoding, mixes the
concatenated [Re, Im] channels with an affine map + LeakyReLU + batch norm,
and adds the real part of the inverse transform back onto the state.

The forward pass is written against the diffcore ops interface so the same
code trains on the tape and differentiates on hyper-dual numbers.
"""

from collections import OrderedDict
from copy import deepcopy
from typing import Dict, List, Optional

import numpy as np

from diffcore.hyperdual import HyperDualResult, hyperdual_eval
from diffcore.ops import NumpyOps
from errors import ConfigError, DataError
from scino.hyperparams import HyperParams

NORM_EPS = 1e-5
BN_MOMENTUM = 0.1

numpy_ops = NumpyOps()


def _uniform_fan_in(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class ScinoNetwork:
    def __init__(
        self,
        hp: HyperParams,
        params: Dict[str, np.ndarray],
        buffers: Dict[str, np.ndarray],
        training: bool = True,
    ):
        self.hp = hp
        self.params = params
        self.buffers = buffers
        self.training = training

    # === CONSTRUCTION ===

    @classmethod
    def initialize(cls, hp: HyperParams, rng: np.random.Generator) -> "ScinoNetwork":
        D, H, S, F, M = hp.n_vars, hp.hidden, hp.final_hidden, hp.fourier_features, hp.lte_hidden
        params: Dict[str, np.ndarray] = OrderedDict()
        buffers: Dict[str, np.ndarray] = OrderedDict()

        params["init.weight"] = _uniform_fan_in(rng, (H, D), D)
        params["init.bias"] = _uniform_fan_in(rng, (H,), D)
        params["init.norm.weight"] = np.ones(H)
        params["init.norm.bias"] = np.zeros(H)

        params["lte.w_proj"] = rng.standard_normal(F)
        params["lte.fc1.weight"] = _uniform_fan_in(rng, (M, 2 * F), 2 * F)
        params["lte.fc1.bias"] = _uniform_fan_in(rng, (M,), 2 * F)
        params["lte.fc2.weight"] = _uniform_fan_in(rng, (H, M), M)
        params["lte.fc2.bias"] = _uniform_fan_in(rng, (H,), M)

        for layer in range(hp.n_layers):
            prefix = f"spec.{layer}"
            params[f"{prefix}.weight"] = _uniform_fan_in(rng, (2 * H, 2 * H), 2 * H)
            params[f"{prefix}.bias"] = _uniform_fan_in(rng, (2 * H,), 2 * H)
            params[f"{prefix}.norm.weight"] = np.ones(2 * H)
            params[f"{prefix}.norm.bias"] = np.zeros(2 * H)
            buffers[f"{prefix}.norm.running_mean"] = np.zeros(2 * H)
            buffers[f"{prefix}.norm.running_var"] = np.ones(2 * H)

        cls._init_head(params, hp, rng)
        return cls(hp, params, buffers, training=True)

    @staticmethod
    def _init_head(params: Dict[str, np.ndarray], hp: HyperParams, rng: np.random.Generator):
        D, H, S = hp.n_vars, hp.hidden, hp.final_hidden
        for name, (out_dim, in_dim) in (("fc1", (H, H)), ("fc2", (S, H)), ("fc3", (D, S))):
            params[f"final.{name}.weight"] = _uniform_fan_in(rng, (out_dim, in_dim), in_dim)
            params[f"final.{name}.bias"] = _uniform_fan_in(rng, (out_dim,), in_dim)

    def reinitialize_head(self, rng: np.random.Generator):
        self._init_head(self.params, self.hp, rng)

    def head_param_names(self) -> List[str]:
        return [name for name in self.params if name.startswith("final.")]

    def copy(self) -> "ScinoNetwork":
        return ScinoNetwork(self.hp, deepcopy(self.params), deepcopy(self.buffers), self.training)

    def with_shared_trunk(self) -> "ScinoNetwork":
        """New network sharing trunk arrays by reference with copied head arrays"""
        params = OrderedDict(
            (name, value.copy() if name.startswith("final.") else value)
            for name, value in self.params.items()
        )
        return ScinoNetwork(self.hp, params, self.buffers, self.training)

    def train(self) -> "ScinoNetwork":
        self.training = True
        return self

    def eval(self) -> "ScinoNetwork":
        self.training = False
        return self

    # === BUILDING BLOCKS ===

    def _linear(self, ops, x, prefix: str):
        y = ops.matmul_t(x, ops.param(f"{prefix}.weight", self.params[f"{prefix}.weight"]))
        return ops.add(y, ops.param(f"{prefix}.bias", self.params[f"{prefix}.bias"]))

    def _affine_norm(self, ops, x_hat, prefix: str):
        gamma = ops.param(f"{prefix}.weight", self.params[f"{prefix}.weight"])
        beta = ops.param(f"{prefix}.bias", self.params[f"{prefix}.bias"])
        return ops.add(ops.mul(x_hat, gamma), beta)

    def _layer_norm(self, ops, h, prefix: str):
        # per-sample statistics, identical in train and eval mode
        centered = ops.sub(h, ops.mean(h, axis=-1))
        var = ops.mean(ops.mul(centered, centered), axis=-1)
        x_hat = ops.div(centered, ops.sqrt(ops.add(var, NORM_EPS)))
        return self._affine_norm(ops, x_hat, prefix)

    def _batch_norm(self, ops, z, prefix: str, update_stats: bool):
        running_mean = self.buffers[f"{prefix}.running_mean"]
        running_var = self.buffers[f"{prefix}.running_var"]
        if self.training:
            batch = ops.value(z).shape[0]
            if batch < 2:
                raise DataError("batch normalization needs more than one sample per batch in train mode")
            mean = ops.mean(z, axis=0)
            centered = ops.sub(z, mean)
            var = ops.mean(ops.mul(centered, centered), axis=0)
            x_hat = ops.div(centered, ops.sqrt(ops.add(var, NORM_EPS)))
            if update_stats:
                unbiased = ops.value(var)[0] * batch / (batch - 1)
                running_mean *= 1.0 - BN_MOMENTUM
                running_mean += BN_MOMENTUM * ops.value(mean)[0]
                running_var *= 1.0 - BN_MOMENTUM
                running_var += BN_MOMENTUM * unbiased
        else:
            scale = 1.0 / np.sqrt(running_var + NORM_EPS)
            x_hat = ops.mul(ops.sub(z, running_mean), scale)
        return self._affine_norm(ops, x_hat, prefix)

    def _dropout(self, ops, h, rng: Optional[np.random.Generator]):
        rate = self.hp.dropout_rate
        if not self.training or rate == 0.0:
            return h
        if rng is None:
            raise ConfigError("train-mode forward with dropout needs a random generator")
        keep = rng.random(ops.value(h).shape) >= rate
        return ops.mul(h, keep / (1.0 - rate))

    # === LEARNABLE TIME ENCODING ===

    def lte_features(self, ops, t):
        """Phi(t) = [cos(t w), sin(t w)] / sqrt(2F), one row per time value"""
        t_col = np.atleast_1d(np.asarray(t, dtype=np.float64)).reshape(-1, 1)
        w = ops.param("lte.w_proj", self.params["lte.w_proj"])
        tw = ops.mul(t_col, w)
        phi = ops.concat([ops.cos(tw), ops.sin(tw)], axis=-1)
        return ops.mul(phi, 1.0 / np.sqrt(2 * self.hp.fourier_features))

    def lte_encode(self, ops, t):
        phi = self.lte_features(ops, t)
        hidden = ops.gelu(self._linear(ops, phi, "lte.fc1"))
        return self._linear(ops, hidden, "lte.fc2")

    # === FORWARD ===

    def trunk(self, ops, t, x, rng: Optional[np.random.Generator] = None, update_stats: bool = True):
        """MLP_init followed by the Fourier layers; returns X^{L+1}"""
        H = self.hp.hidden
        slope = self.hp.leaky_slope

        # the bias keeps the trunk from being invariant to positive rescaling of x
        h = ops.leaky_relu(self._linear(ops, x, "init"), slope)
        h = self._layer_norm(ops, h, "init.norm")
        h = self._dropout(ops, h, rng)
        h = ops.check(h, "init")

        # time encoding depends on t only
        lte = self.lte_encode(ops.constant_ops, t)

        for layer in range(self.hp.n_layers):
            prefix = f"spec.{layer}"
            re, im = ops.fft(h)
            chi = ops.concat([ops.mul(re, lte), ops.mul(im, lte)], axis=-1)
            z = ops.leaky_relu(self._linear(ops, chi, prefix), slope)
            z = self._batch_norm(ops, z, f"{prefix}.norm", update_stats)
            h = ops.add(h, ops.ifft_real(ops.slice_last(z, 0, H), ops.slice_last(z, H, 2 * H)))
            h = ops.check(h, prefix)
        return h

    def head(self, ops, h):
        slope = self.hp.leaky_slope
        h = ops.leaky_relu(self._linear(ops, h, "final.fc1"), slope)
        h = ops.leaky_relu(self._linear(ops, h, "final.fc2"), slope)
        return ops.check(self._linear(ops, h, "final.fc3"), "final")

    def forward(self, ops, t, x, rng: Optional[np.random.Generator] = None, update_stats: bool = True):
        return self.head(ops, self.trunk(ops, t, x, rng=rng, update_stats=update_stats))

    def predict(self, t, x: np.ndarray, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        out = self.forward(numpy_ops, t, np.atleast_2d(x), rng=rng, update_stats=False)
        return out[0] if single else out

    def forward_hyperdual(self, t, x: np.ndarray, dir_a: int, dir_b: int) -> HyperDualResult:
        """Value, first and mixed second input derivatives of the eval-mode forward"""
        if self.training:
            raise ConfigError("input derivatives need an eval-mode network")
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return hyperdual_eval(lambda ops, xx: self.forward(ops, t, xx), x, dir_a, dir_b)
