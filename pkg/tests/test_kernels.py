import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slowgrowth import _pykernels as py

compiled = pytest.importorskip("slowgrowth._kernels")

RNG = np.random.default_rng(7)
PEND_COS = np.array([0.0, -1.0 / (4 * math.pi ** 2)])
PEND_SIN = np.zeros(2)


def test_backends_are_labelled():
    assert py.BACKEND == "python"
    assert compiled.BACKEND == "compiled"


@pytest.mark.parametrize("modulation", [0.0, 0.3])
def test_strang_parity(modulation):
    q = RNG.uniform(0, 1, 40)
    p = RNG.uniform(-1, 1, 40)
    cos_c = np.array([0.0, 0.02, -0.01])
    sin_c = np.array([0.0, 0.005, 0.003])
    a = py.strang_fourier(q, p, cos_c, sin_c, 1.3, modulation, 0.25, 1e-3, 700, True)
    b = compiled.strang_fourier(q, p, cos_c, sin_c, 1.3, modulation, 0.25, 1e-3, 700, True)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=0, atol=1e-13)


def test_strang_zero_steps_is_identity():
    q, p = RNG.uniform(0, 1, 5), RNG.uniform(-1, 1, 5)
    for mod in (py, compiled):
        q1, p1, jac = mod.strang_fourier(q, p, PEND_COS, PEND_SIN, 1.0, 0.0, 0.0, 1e-3, 0, True)
        assert np.array_equal(q1, q) and np.array_equal(p1, p)
        assert np.array_equal(jac, np.broadcast_to(np.eye(2), (5, 2, 2)))


def test_strang_dd_parity_is_bitwise():
    q, p = RNG.uniform(0, 1, 30), RNG.uniform(-0.5, 0.5, 30)
    zeros = np.zeros(30)
    cos_c = np.array([0.0, 0.02, -0.01])
    sin_c = np.array([0.0, 0.005, 0.003])
    a = py.strang_fourier_dd(q, zeros, p, zeros, cos_c, sin_c, 1.3, 0.2, 0.1, 1e-3, 300)
    b = compiled.strang_fourier_dd(q, zeros, p, zeros, cos_c, sin_c, 1.3, 0.2, 0.1, 1e-3, 300)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_strang_dd_agrees_with_double():
    q, p = RNG.uniform(0, 1, 20), RNG.uniform(-0.5, 0.5, 20)
    zeros = np.zeros(20)
    qd, pd, _ = compiled.strang_fourier(q, p, PEND_COS, PEND_SIN, 1.0, 0.0, 0.0, 1e-3, 1000, False)
    qh, ql, ph, pl = compiled.strang_fourier_dd(q, zeros, p, zeros, PEND_COS, PEND_SIN, 1.0, 0.0,
                                                0.0, 1e-3, 1000)
    assert np.allclose(qh + ql, qd, atol=1e-11)
    assert np.allclose(ph + pl, pd, atol=1e-11)


def test_strang_dd_keeps_equilibria_exact():
    q = np.array([0.0, 0.5])
    zeros = np.zeros(2)
    for mod in (py, compiled):
        qh, ql, ph, pl = mod.strang_fourier_dd(q, zeros, zeros, zeros, PEND_COS, PEND_SIN, 1.0,
                                               0.0, 0.0, 1e-3, 2000)
        assert np.array_equal(qh, q) and np.all(ql == 0) and np.all(ph == 0) and np.all(pl == 0)


def test_strang_dd_resolves_sub_ulp_offsets():
    # two points on the unstable manifold that coincide in double precision
    q = np.array([0.5, 0.5])
    lo = np.array([0.0, 1e-25])
    zeros = np.zeros(2)
    qh, ql, ph, pl = compiled.strang_fourier_dd(q, lo, zeros, zeros, PEND_COS, PEND_SIN, 1.0, 0.0,
                                                0.0, 1e-3, 40000)
    assert qh[0] == 0.5 and qh[1] != 0.5


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-1, 1).filter(lambda v: v == 0 or abs(v) > 1e-100),
       b=st.floats(-1, 1).filter(lambda v: v == 0 or abs(v) > 1e-100))
def test_double_double_primitives(a, b):
    # products of tiny values underflow, where the error term is not exact
    s, e = py._two_sum(np.float64(a), np.float64(b))
    assert float(s) == a + b
    assert Fraction(float(s)) + Fraction(float(e)) == Fraction(a) + Fraction(b)
    p, e = py._two_prod(np.float64(a), np.float64(b))
    assert Fraction(float(p)) + Fraction(float(e)) == Fraction(a) * Fraction(b)


def test_sincos_turns_exact_quadrants():
    r = np.array([0.0, 0.25, 0.5, 0.75, 1.0, -0.5])
    (sh, sl), (ch, cl) = py._sincos_turns((r, np.zeros_like(r)))
    assert np.array_equal(sh + sl, [0.0, 1.0, 0.0, -1.0, 0.0, 0.0])
    assert np.array_equal(ch + cl, [1.0, 0.0, -1.0, 0.0, 1.0, -1.0])
    x = RNG.uniform(-2, 2, 50)
    (sh, sl), (ch, cl) = py._sincos_turns((x, np.zeros_like(x)))
    assert np.allclose(sh, np.sin(2 * math.pi * x), atol=1e-15)
    assert np.allclose(ch, np.cos(2 * math.pi * x), atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), k=st.integers(1, 4))
def test_gram_det_parity(seed, k):
    frames = np.random.default_rng(seed).normal(size=(25, k, 6))
    a = py.gram_det(frames)
    b = compiled.gram_det(frames)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("kappa", [math.pi ** 2, 4 * math.pi ** 2])
def test_jacobi_zero_parity(kappa):
    a = py.jacobi_rk4_zeros(kappa, 3.0, 1e-4)
    b = compiled.jacobi_rk4_zeros(kappa, 3.0, 1e-4)
    assert np.allclose(a, b, rtol=0, atol=1e-13)
    per = round(math.sqrt(kappa) / math.pi)
    expected = np.arange(1, 3 * per) / per
    assert np.allclose(a, expected, atol=1e-8)
