import numpy as np
import pytest

from diffcore.ops import gelu
from diffcore.tape import GradientRecord, Tape, param_gradient
from diffusion.trainer import denoising_loss
from errors import DataError, NumericError


def _numeric_grad(fn, x, h=1e-6):
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        step = np.zeros_like(x)
        step[idx] = h
        grad[idx] = (fn(x + step) - fn(x - step)) / (2 * h)
    return grad


def test_broadcast_add_and_mul_gradients():
    tape = Tape()
    w = tape.param("w", np.array([1.0, 2.0, 3.0]))
    x = tape.const(np.arange(6.0).reshape(2, 3))
    loss = tape.sum(tape.mul(tape.add(x, w), w))
    tape.backward(loss)
    # d/dw sum((x + w) * w) = sum over rows of (x + 2w)
    expected = np.arange(6.0).reshape(2, 3).sum(axis=0) + 2 * 2 * np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(tape.gradients()["w"], expected)


def test_matmul_and_div_match_finite_differences(rng):
    x = rng.standard_normal((4, 3))
    w0 = rng.standard_normal((2, 3))
    d = rng.uniform(1.0, 2.0, size=2)

    def loss_value(w):
        return float(np.sum((x @ w.T) / d))

    tape = Tape()
    w = tape.param("w", w0)
    loss = tape.sum(tape.div(tape.matmul_t(tape.const(x), w), tape.const(d)))
    tape.backward(loss)
    np.testing.assert_allclose(tape.gradients()["w"], _numeric_grad(loss_value, w0), rtol=1e-6, atol=1e-8)


def test_fft_roundtrip_gradient(rng):
    x0 = rng.standard_normal((3, 8))
    weights = rng.standard_normal((3, 8))

    def loss_value(x):
        z = np.fft.fft(x, axis=-1) * 0.5
        return float(np.sum(np.fft.ifft(z, axis=-1).real * weights))

    tape = Tape()
    x = tape.param("x", x0)
    re, im = tape.fft(x)
    out = tape.ifft_real(tape.mul(re, 0.5), tape.mul(im, 0.5))
    tape.backward(tape.sum(tape.mul(out, tape.const(weights))))
    np.testing.assert_allclose(tape.gradients()["x"], _numeric_grad(loss_value, x0), atol=1e-7)


def test_mean_sqrt_gelu_chain(rng):
    x0 = rng.uniform(0.5, 2.0, size=(3, 4))

    def loss_value(x):
        return float(np.mean(np.sqrt(gelu(x)), axis=0).sum())

    tape = Tape()
    x = tape.param("x", x0)
    tape.backward(tape.sum(tape.mean(tape.sqrt(tape.gelu(x)), axis=0)))
    np.testing.assert_allclose(tape.gradients()["x"], _numeric_grad(loss_value, x0), rtol=1e-5, atol=1e-8)


def test_concat_and_slice_route_gradients():
    tape = Tape()
    a = tape.param("a", np.ones((2, 2)))
    b = tape.param("b", np.ones((2, 3)))
    joined = tape.concat([a, b], axis=-1)
    tape.backward(tape.sum(tape.slice_last(joined, 1, 3)))
    np.testing.assert_array_equal(tape.gradients()["a"], [[0, 1], [0, 1]])
    np.testing.assert_array_equal(tape.gradients()["b"], [[1, 0, 0], [1, 0, 0]])


def test_backward_rejects_non_scalar_and_non_finite_loss():
    tape = Tape()
    with pytest.raises(DataError):
        tape.backward(tape.param("v", np.ones(3)))
    tape = Tape()
    with pytest.raises(NumericError):
        tape.backward(tape.div(tape.param("v", np.ones(1)), 0.0))


def test_frozen_parameters_are_constants():
    tape = Tape(trainable={"a"})
    a = tape.param("a", np.array([2.0]))
    b = tape.param("b", np.array([3.0]))
    tape.backward(tape.sum(tape.mul(a, b)))
    record = tape.gradients()
    assert record.names() == ["a"]
    np.testing.assert_allclose(record["a"], [3.0])


def test_param_gradient_shapes_match_network(tiny_network, rng):
    batch = _batch(tiny_network, rng)
    loss, record = param_gradient(tiny_network, denoising_loss, batch)
    assert np.isfinite(loss)
    assert set(record.names()) == set(tiny_network.params)
    for name, value in tiny_network.params.items():
        assert record[name].shape == value.shape


def test_param_gradient_head_only(tiny_network, rng):
    head = set(tiny_network.head_param_names())
    _, record = param_gradient(tiny_network, denoising_loss, _batch(tiny_network, rng), trainable=head)
    assert set(record.names()) == head


def test_validate_reports_shape_mismatch():
    record = GradientRecord({"w": np.zeros(3)})
    with pytest.raises(DataError):
        record.validate({"w": np.zeros(4)})
    with pytest.raises(DataError):
        record.validate({})


def _batch(network, rng):
    n, d = 6, network.hp.n_vars
    t_input = rng.uniform(0.0, 1.0, size=n)
    eps = rng.standard_normal((n, d))
    out_scale = -rng.uniform(0.01, 1.0, size=(n, 1))
    return t_input, rng.standard_normal((n, d)), eps, out_scale, np.random.default_rng(5)
