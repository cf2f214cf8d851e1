"""
Array-operation backends shared by the network forward pass.

A forward pass is written once against the methods below and runs on
plain arrays (NumpyOps), on the reverse-mode tape (diffcore.tape.Tape) or
on hyper-dual numbers (diffcore.hyperdual.HyperDualOps).
"""

from typing import Protocol, Sequence, Tuple

import numpy as np

from diffcore.fft import fft_real_imag, ifft_real
from errors import NumericError

GELU_C = np.sqrt(2.0 / np.pi)
GELU_K = 0.044715


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float) -> np.ndarray:
    # derivative at exactly 0 takes the negative-side slope
    return np.where(x > 0, 1.0, slope)


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(GELU_C * (x + GELU_K * x**3)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    t = np.tanh(GELU_C * (x + GELU_K * x**3))
    du = GELU_C * (1.0 + 3.0 * GELU_K * x**2)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du


def gelu_grad2(x: np.ndarray) -> np.ndarray:
    t = np.tanh(GELU_C * (x + GELU_K * x**3))
    sech2 = 1.0 - t**2
    du = GELU_C * (1.0 + 3.0 * GELU_K * x**2)
    d2u = GELU_C * 6.0 * GELU_K * x
    return sech2 * du + 0.5 * x * (sech2 * d2u - 2.0 * t * sech2 * du**2)


def check_finite(values: np.ndarray, layer_name: str):
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite activation in layer '{layer_name}'")


class Ops(Protocol):
    """Method set every backend provides"""

    @property
    def constant_ops(self) -> "Ops": ...

    def param(self, name: str, array: np.ndarray): ...
    def const(self, array): ...
    def value(self, x) -> np.ndarray: ...
    def add(self, a, b): ...
    def sub(self, a, b): ...
    def mul(self, a, b): ...
    def div(self, a, b): ...
    def matmul_t(self, x, w): ...
    def leaky_relu(self, x, slope: float): ...
    def gelu(self, x): ...
    def sin(self, x): ...
    def cos(self, x): ...
    def sqrt(self, x): ...
    def mean(self, x, axis: int, keepdims: bool = True): ...
    def sum(self, x, axis=None, keepdims: bool = False): ...
    def concat(self, parts: Sequence, axis: int = -1): ...
    def slice_last(self, x, start: int, stop: int): ...
    def fft(self, x) -> Tuple: ...
    def ifft_real(self, z_real, z_imag): ...
    def check(self, x, layer_name: str): ...


class NumpyOps:
    """Plain float64 evaluation, no derivative tracking"""

    @property
    def constant_ops(self) -> "NumpyOps":
        return self

    def param(self, name: str, array: np.ndarray) -> np.ndarray:
        return array

    def const(self, array) -> np.ndarray:
        return np.asarray(array, dtype=np.float64)

    def value(self, x) -> np.ndarray:
        return np.asarray(x)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        return a / b

    def matmul_t(self, x, w):
        return x @ w.T

    def leaky_relu(self, x, slope: float):
        return leaky_relu(x, slope)

    def gelu(self, x):
        return gelu(x)

    def sin(self, x):
        return np.sin(x)

    def cos(self, x):
        return np.cos(x)

    def sqrt(self, x):
        return np.sqrt(x)

    def mean(self, x, axis: int, keepdims: bool = True):
        return np.mean(x, axis=axis, keepdims=keepdims)

    def sum(self, x, axis=None, keepdims: bool = False):
        return np.sum(x, axis=axis, keepdims=keepdims)

    def concat(self, parts, axis: int = -1):
        return np.concatenate(parts, axis=axis)

    def slice_last(self, x, start: int, stop: int):
        return x[..., start:stop]

    def fft(self, x):
        return fft_real_imag(x)

    def ifft_real(self, z_real, z_imag):
        return ifft_real(z_real, z_imag)

    def check(self, x, layer_name: str):
        check_finite(x, layer_name)
        return x


numpy_ops = NumpyOps()
