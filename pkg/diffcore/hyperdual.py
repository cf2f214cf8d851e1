"""
Hyper-dual numbers: value, two first-order directions and the mixed second
order slot, carried as whole arrays so one pass differentiates a batch.

The two perturbation units are independent nilpotents (e1^2 = e2^2 = 0,
e1 e2 != 0), so seeding both along the same coordinate leaves the plain
second derivative in the mixed slot.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from diffcore.fft import fft_real_imag, ifft_real
from diffcore.ops import NumpyOps, check_finite, gelu, gelu_grad, gelu_grad2, leaky_relu, leaky_relu_grad


class HyperDual:
    __slots__ = ("v", "a", "b", "ab")
    __array_ufunc__ = None

    def __init__(self, v, a=None, b=None, ab=None):
        self.v = np.asarray(v, dtype=np.float64)
        zeros = np.zeros_like(self.v)
        self.a = zeros if a is None else np.asarray(a, dtype=np.float64)
        self.b = zeros if b is None else np.asarray(b, dtype=np.float64)
        self.ab = zeros if ab is None else np.asarray(ab, dtype=np.float64)

    @staticmethod
    def lift(x) -> "HyperDual":
        return x if isinstance(x, HyperDual) else HyperDual(x)

    def map_linear(self, fn) -> "HyperDual":
        return HyperDual(fn(self.v), fn(self.a), fn(self.b), fn(self.ab))

    def apply(self, f0: np.ndarray, f1: np.ndarray, f2: np.ndarray) -> "HyperDual":
        """Chain rule for a scalar function with value f0, slope f1 and curvature f2"""
        return HyperDual(f0, f1 * self.a, f1 * self.b, f1 * self.ab + f2 * self.a * self.b)

    def __add__(self, other):
        o = HyperDual.lift(other)
        return HyperDual(self.v + o.v, self.a + o.a, self.b + o.b, self.ab + o.ab)

    __radd__ = __add__

    def __neg__(self):
        return HyperDual(-self.v, -self.a, -self.b, -self.ab)

    def __sub__(self, other):
        return self + (-HyperDual.lift(other))

    def __rsub__(self, other):
        return HyperDual.lift(other) - self

    def __mul__(self, other):
        o = HyperDual.lift(other)
        return HyperDual(
            self.v * o.v,
            self.a * o.v + self.v * o.a,
            self.b * o.v + self.v * o.b,
            self.ab * o.v + self.a * o.b + self.b * o.a + self.v * o.ab,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "HyperDual":
        inv = 1.0 / self.v
        return self.apply(inv, -(inv**2), 2.0 * inv**3)

    def __truediv__(self, other):
        return self * HyperDual.lift(other).reciprocal()

    def __rtruediv__(self, other):
        return HyperDual.lift(other) * self.reciprocal()

    def __pow__(self, n: int):
        return self.apply(self.v**n, n * self.v ** (n - 1), n * (n - 1) * self.v ** (n - 2))

    @property
    def shape(self):
        return self.v.shape


@dataclass
class HyperDualResult:
    value: np.ndarray
    d_a: np.ndarray
    d_b: np.ndarray
    d_ab: np.ndarray

    @classmethod
    def from_hyperdual(cls, h: HyperDual) -> "HyperDualResult":
        return cls(h.v, h.a, h.b, h.ab)


class HyperDualOps:
    """Ops backend over HyperDual values; parameters enter as constants"""

    def __init__(self):
        self._constant_ops = NumpyOps()

    @property
    def constant_ops(self) -> NumpyOps:
        return self._constant_ops

    def param(self, name: str, array: np.ndarray) -> np.ndarray:
        return array

    def const(self, array) -> np.ndarray:
        return np.asarray(array, dtype=np.float64)

    def value(self, x) -> np.ndarray:
        return x.v if isinstance(x, HyperDual) else np.asarray(x)

    def add(self, a, b):
        return HyperDual.lift(a) + b

    def sub(self, a, b):
        return HyperDual.lift(a) - b

    def mul(self, a, b):
        return HyperDual.lift(a) * b

    def div(self, a, b):
        return HyperDual.lift(a) / b

    def matmul_t(self, x, w):
        x = HyperDual.lift(x)
        if isinstance(w, HyperDual):
            raise TypeError("hyper-dual weights are not supported")
        return x.map_linear(lambda s: s @ w.T)

    def leaky_relu(self, x, slope: float):
        x = HyperDual.lift(x)
        return x.apply(leaky_relu(x.v, slope), leaky_relu_grad(x.v, slope), np.zeros_like(x.v))

    def gelu(self, x):
        x = HyperDual.lift(x)
        return x.apply(gelu(x.v), gelu_grad(x.v), gelu_grad2(x.v))

    def sin(self, x):
        x = HyperDual.lift(x)
        s = np.sin(x.v)
        return x.apply(s, np.cos(x.v), -s)

    def cos(self, x):
        x = HyperDual.lift(x)
        c = np.cos(x.v)
        return x.apply(c, -np.sin(x.v), -c)

    def sqrt(self, x):
        x = HyperDual.lift(x)
        r = np.sqrt(x.v)
        return x.apply(r, 0.5 / r, -0.25 / (r * x.v))

    def mean(self, x, axis: int, keepdims: bool = True):
        return HyperDual.lift(x).map_linear(lambda s: np.mean(s, axis=axis, keepdims=keepdims))

    def sum(self, x, axis=None, keepdims: bool = False):
        return HyperDual.lift(x).map_linear(lambda s: np.sum(s, axis=axis, keepdims=keepdims))

    def concat(self, parts, axis: int = -1):
        parts = [HyperDual.lift(p) for p in parts]
        return HyperDual(
            *(np.concatenate([getattr(p, slot) for p in parts], axis=axis) for slot in HyperDual.__slots__)
        )

    def slice_last(self, x, start: int, stop: int):
        return HyperDual.lift(x).map_linear(lambda s: s[..., start:stop])

    def fft(self, x):
        x = HyperDual.lift(x)
        parts = [fft_real_imag(getattr(x, slot)) for slot in HyperDual.__slots__]
        return HyperDual(*(p[0] for p in parts)), HyperDual(*(p[1] for p in parts))

    def ifft_real(self, z_real, z_imag):
        zr, zi = HyperDual.lift(z_real), HyperDual.lift(z_imag)
        return HyperDual(
            *(ifft_real(getattr(zr, slot), getattr(zi, slot)) for slot in HyperDual.__slots__)
        )

    def check(self, x, layer_name: str):
        h = HyperDual.lift(x)
        for slot in HyperDual.__slots__:
            check_finite(getattr(h, slot), f"{layer_name}[{slot}]")
        return x


def seed_input(x: np.ndarray, dir_a: int, dir_b: int) -> HyperDual:
    """Lift an (N, D) or (D,) input with unit seeds on coordinates dir_a and dir_b"""
    x = np.asarray(x, dtype=np.float64)
    a = np.zeros_like(x)
    b = np.zeros_like(x)
    a[..., dir_a] = 1.0
    b[..., dir_b] = 1.0
    return HyperDual(x, a, b)


def hyperdual_eval(f: Callable, x: np.ndarray, dir_a: int, dir_b: int) -> HyperDualResult:
    """
    Evaluate ``f(ops, x)`` on hyper-dual inputs.

    Returns the value, first derivatives along e_{dir_a} and e_{dir_b}, and
    the mixed second derivative for every output coordinate.
    """
    ops = HyperDualOps()
    out = HyperDual.lift(f(ops, seed_input(x, dir_a, dir_b)))
    ops.check(out, "output")
    return HyperDualResult.from_hyperdual(out)
