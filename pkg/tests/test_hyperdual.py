import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffcore.hyperdual import HyperDual, hyperdual_eval
from diffcore.ops import gelu


def test_product_rule_in_mixed_slot():
    u = HyperDual(2.0, 1.0, 0.5, 0.25)
    v = HyperDual(3.0, -1.0, 2.0, 1.0)
    z = u * v
    assert z.v == pytest.approx(6.0)
    assert z.a == pytest.approx(1.0 * 3.0 + 2.0 * -1.0)
    assert z.b == pytest.approx(0.5 * 3.0 + 2.0 * 2.0)
    assert z.ab == pytest.approx(0.25 * 3.0 + 1.0 * 2.0 + 0.5 * -1.0 + 2.0 * 1.0)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_mixed_partial_of_polynomial(x0, y0):
    # f(x, y) = x^2 y + y^3
    def f(ops, x):
        a = ops.slice_last(x, 0, 1)
        b = ops.slice_last(x, 1, 2)
        return ops.add(ops.mul(ops.mul(a, a), b), ops.mul(ops.mul(b, b), b))

    point = np.array([[x0, y0]])
    cross = hyperdual_eval(f, point, 0, 1)
    assert cross.value[0, 0] == pytest.approx(x0**2 * y0 + y0**3)
    assert cross.d_a[0, 0] == pytest.approx(2 * x0 * y0)
    assert cross.d_b[0, 0] == pytest.approx(x0**2 + 3 * y0**2)
    assert cross.d_ab[0, 0] == pytest.approx(2 * x0)

    same = hyperdual_eval(f, point, 1, 1)
    assert same.d_ab[0, 0] == pytest.approx(6 * y0)


def test_transcendental_second_derivatives():
    x = np.array([[0.7]])
    sin = hyperdual_eval(lambda ops, v: ops.sin(v), x, 0, 0)
    assert sin.d_ab[0, 0] == pytest.approx(-np.sin(0.7))
    root = hyperdual_eval(lambda ops, v: ops.sqrt(v), x, 0, 0)
    assert root.d_a[0, 0] == pytest.approx(0.5 / np.sqrt(0.7))
    assert root.d_ab[0, 0] == pytest.approx(-0.25 * 0.7**-1.5)
    recip = hyperdual_eval(lambda ops, v: ops.div(1.0, v), x, 0, 0)
    assert recip.d_ab[0, 0] == pytest.approx(2.0 / 0.7**3)


def test_gelu_matches_finite_differences():
    x0, h = 0.3, 1e-4
    res = hyperdual_eval(lambda ops, v: ops.gelu(v), np.array([[x0]]), 0, 0)
    fd1 = (gelu(x0 + h) - gelu(x0 - h)) / (2 * h)
    fd2 = (gelu(x0 + h) - 2 * gelu(x0) + gelu(x0 - h)) / h**2
    assert res.d_a[0, 0] == pytest.approx(fd1, rel=1e-6)
    assert res.d_ab[0, 0] == pytest.approx(fd2, rel=1e-4)


def test_spectral_ops_are_linear_in_every_slot(rng):
    x = rng.standard_normal((2, 8))

    def f(ops, v):
        re, im = ops.fft(v)
        return ops.ifft_real(ops.mul(re, 2.0), ops.mul(im, 2.0))

    res = hyperdual_eval(f, x, 3, 3)
    np.testing.assert_allclose(res.value, 2 * x, atol=1e-12)
    expected = np.zeros_like(x)
    expected[:, 3] = 2.0
    np.testing.assert_allclose(res.d_a, expected, atol=1e-12)
    np.testing.assert_allclose(res.d_ab, 0.0, atol=1e-12)
