"""
Reverse-mode differentiation by recording a forward pass on a tape.

A fresh Tape is built per batch; nothing is reused across batches.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from diffcore.fft import fft_real_imag, ifft_real
from diffcore.ops import check_finite, gelu, gelu_grad, leaky_relu, leaky_relu_grad
from errors import DataError, NumericError


class Node:
    __slots__ = ("value", "grad", "name")

    def __init__(self, value, name: Optional[str] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


@dataclass
class GradientRecord:
    """Per-parameter gradients keyed like the network's parameter dict"""

    grads: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.grads[name]

    def __contains__(self, name: str) -> bool:
        return name in self.grads

    def names(self) -> List[str]:
        return list(self.grads)

    def validate(self, params: Dict[str, np.ndarray]):
        for name, g in self.grads.items():
            if name not in params:
                raise DataError(f"gradient for unknown parameter '{name}'")
            if g.shape != params[name].shape:
                raise DataError(
                    f"gradient shape {g.shape} != parameter shape {params[name].shape} for '{name}'"
                )


class Tape:
    """Records operations on Nodes and replays them backward"""

    def __init__(self, trainable: Optional[set] = None):
        self._records: List[Tuple[Node, Callable[[np.ndarray], None]]] = []
        self._params: Dict[str, Node] = {}
        self._trainable = trainable

    @property
    def constant_ops(self) -> "Tape":
        return self

    # === LEAVES ===

    def param(self, name: str, array: np.ndarray):
        if self._trainable is not None and name not in self._trainable:
            return self.const(array)
        node = self._params.get(name)
        if node is None:
            node = Node(array, name=name)
            self._params[name] = node
        return node

    def const(self, array) -> Node:
        return Node(array)

    def value(self, x) -> np.ndarray:
        return x.value if isinstance(x, Node) else np.asarray(x)

    def _lift(self, x) -> Node:
        return x if isinstance(x, Node) else self.const(x)

    def _record(self, out: Node, backward: Callable[[np.ndarray], None]) -> Node:
        self._records.append((out, backward))
        return out

    # === ARITHMETIC ===

    def add(self, a, b):
        a, b = self._lift(a), self._lift(b)
        out = Node(a.value + b.value)

        def backward(g):
            a.accumulate(_unbroadcast(g, a.shape))
            b.accumulate(_unbroadcast(g, b.shape))

        return self._record(out, backward)

    def sub(self, a, b):
        a, b = self._lift(a), self._lift(b)
        out = Node(a.value - b.value)

        def backward(g):
            a.accumulate(_unbroadcast(g, a.shape))
            b.accumulate(_unbroadcast(-g, b.shape))

        return self._record(out, backward)

    def mul(self, a, b):
        a, b = self._lift(a), self._lift(b)
        out = Node(a.value * b.value)

        def backward(g):
            a.accumulate(_unbroadcast(g * b.value, a.shape))
            b.accumulate(_unbroadcast(g * a.value, b.shape))

        return self._record(out, backward)

    def div(self, a, b):
        a, b = self._lift(a), self._lift(b)
        out = Node(a.value / b.value)

        def backward(g):
            a.accumulate(_unbroadcast(g / b.value, a.shape))
            b.accumulate(_unbroadcast(-g * a.value / b.value**2, b.shape))

        return self._record(out, backward)

    def matmul_t(self, x, w):
        x, w = self._lift(x), self._lift(w)
        out = Node(x.value @ w.value.T)

        def backward(g):
            x.accumulate(g @ w.value)
            w.accumulate(g.T @ x.value)

        return self._record(out, backward)

    # === ELEMENTWISE ===

    def _unary(self, x, fn, dfn):
        x = self._lift(x)
        out = Node(fn(x.value))

        def backward(g):
            x.accumulate(g * dfn(x.value))

        return self._record(out, backward)

    def leaky_relu(self, x, slope: float):
        return self._unary(x, lambda v: leaky_relu(v, slope), lambda v: leaky_relu_grad(v, slope))

    def gelu(self, x):
        return self._unary(x, gelu, gelu_grad)

    def sin(self, x):
        return self._unary(x, np.sin, np.cos)

    def cos(self, x):
        return self._unary(x, np.cos, lambda v: -np.sin(v))

    def sqrt(self, x):
        return self._unary(x, np.sqrt, lambda v: 0.5 / np.sqrt(v))

    # === REDUCTIONS AND SHAPES ===

    def mean(self, x, axis: int, keepdims: bool = True):
        x = self._lift(x)
        count = x.shape[axis]
        out = Node(np.mean(x.value, axis=axis, keepdims=keepdims))

        def backward(g):
            g = g if keepdims else np.expand_dims(g, axis)
            x.accumulate(np.broadcast_to(g, x.shape) / count)

        return self._record(out, backward)

    def sum(self, x, axis=None, keepdims: bool = False):
        x = self._lift(x)
        out = Node(np.sum(x.value, axis=axis, keepdims=keepdims))

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            x.accumulate(np.broadcast_to(g, x.shape))

        return self._record(out, backward)

    def concat(self, parts, axis: int = -1):
        parts = [self._lift(p) for p in parts]
        out = Node(np.concatenate([p.value for p in parts], axis=axis))
        bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

        def backward(g):
            for p, piece in zip(parts, np.split(g, bounds, axis=axis)):
                p.accumulate(piece)

        return self._record(out, backward)

    def slice_last(self, x, start: int, stop: int):
        x = self._lift(x)
        out = Node(x.value[..., start:stop])

        def backward(g):
            full = np.zeros_like(x.value)
            full[..., start:stop] = g
            x.accumulate(full)

        return self._record(out, backward)

    # === SPECTRAL ===

    def fft(self, x):
        x = self._lift(x)
        re_val, im_val = fft_real_imag(x.value)
        re, im = Node(re_val), Node(im_val)

        def backward_re(g):
            x.accumulate(fft_real_imag(g)[0])

        def backward_im(g):
            x.accumulate(fft_real_imag(g)[1])

        self._record(re, backward_re)
        self._record(im, backward_im)
        return re, im

    def ifft_real(self, z_real, z_imag):
        z_real, z_imag = self._lift(z_real), self._lift(z_imag)
        out = Node(ifft_real(z_real.value, z_imag.value))
        size = out.shape[-1]

        def backward(g):
            g_re, g_im = fft_real_imag(g)
            z_real.accumulate(g_re / size)
            z_imag.accumulate(g_im / size)

        return self._record(out, backward)

    def check(self, x, layer_name: str):
        check_finite(self.value(x), layer_name)
        return x

    # === BACKWARD ===

    def backward(self, loss: Node):
        if loss.value.size != 1:
            raise DataError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not np.isfinite(loss.value).all():
            raise NumericError(f"non-finite loss {float(loss.value)}")
        loss.grad = np.ones_like(loss.value)
        for out, backward in reversed(self._records):
            if out.grad is not None:
                backward(out.grad)

    def gradients(self) -> GradientRecord:
        return GradientRecord(
            {
                name: (node.grad if node.grad is not None else np.zeros_like(node.value))
                for name, node in self._params.items()
            }
        )


def param_gradient(network, loss_fn, batch, trainable: Optional[set] = None) -> Tuple[float, GradientRecord]:
    """
    Mean-batch loss and its gradient with respect to every parameter.

    ``loss_fn(tape, network, batch)`` runs the forward pass on the tape and
    returns a scalar Node.
    """
    tape = Tape(trainable=trainable)
    loss = loss_fn(tape, network, batch)
    tape.backward(loss)
    record = tape.gradients()
    # parameters the loss never touched still get an explicit zero buffer
    names = trainable if trainable is not None else network.params.keys()
    for name in names:
        if name not in record:
            record.grads[name] = np.zeros_like(network.params[name])
    record.validate(network.params)
    return float(loss.value), record
