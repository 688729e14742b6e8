"""Reference implementations of the hot kernels (numpy / pure Python).

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and semantics. The two are checked against each other in the
test-suite and timed against each other in ``benchmarks/bench_kernels.py``.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _fourier_terms(q, cos_c, sin_c, wave):
    """Return V'(q) and V''(q) for V = sum a_k cos(k w q) + b_k sin(k w q)."""
    dv = np.zeros_like(q)
    ddv = np.zeros_like(q)
    for k in range(1, len(cos_c)):
        kw = k * wave
        c = np.cos(kw * q)
        s = np.sin(kw * q)
        dv += kw * (-cos_c[k] * s + sin_c[k] * c)
        ddv -= kw * kw * (cos_c[k] * c + sin_c[k] * s)
    return dv, ddv


def strang_fourier(q, p, cos_c, sin_c, length, modulation, t0, h, nsteps, with_jacobian):
    """Advance ``nsteps`` Strang steps of H = p^2/2 + g(t) V(q).

    ``g(t) = 1 + modulation * sin(2 pi t)`` and ``V`` is the Fourier series
    with coefficient arrays indexed by harmonic (index 0 ignored). Kick-drift-kick
    with the interior half kicks merged. Returns ``(q, p, jac)`` where ``jac`` has
    shape (N, 2, 2) or is None.
    """
    q = np.array(q, dtype=np.float64, copy=True)
    p = np.array(p, dtype=np.float64, copy=True)
    cos_c = np.asarray(cos_c, dtype=np.float64)
    sin_c = np.asarray(sin_c, dtype=np.float64)
    wave = 2.0 * math.pi / length
    n = q.shape[0]
    if with_jacobian:
        m11 = np.ones(n)
        m12 = np.zeros(n)
        m21 = np.zeros(n)
        m22 = np.ones(n)
    if nsteps <= 0:
        jac = None
        if with_jacobian:
            jac = np.stack([np.stack([m11, m12], -1), np.stack([m21, m22], -1)], -2)
        return q, p, jac

    def weight(t):
        return 1.0 + modulation * math.sin(2.0 * math.pi * t)

    def kick(t, c):
        dv, ddv = _fourier_terms(q, cos_c, sin_c, wave)
        g = c * weight(t)
        p[:] = p - g * dv
        if with_jacobian:
            k = -g * ddv
            m21[:] = m21 + k * m11
            m22[:] = m22 + k * m12

    def drift():
        q[:] = q + h * p
        if with_jacobian:
            m11[:] = m11 + h * m21
            m12[:] = m12 + h * m22

    kick(t0, 0.5 * h)
    for step in range(1, nsteps + 1):
        drift()
        coef = 0.5 * h if step == nsteps else h
        kick(t0 + step * h, coef)
    jac = None
    if with_jacobian:
        jac = np.stack([np.stack([m11, m12], -1), np.stack([m21, m22], -1)], -2)
    return q, p, jac


def gram_det(frames):
    """Determinants of the Gram matrices F F^T for a stack of frames (N, i, D)."""
    frames = np.asarray(frames, dtype=np.float64)
    gram = np.einsum("nid,njd->nij", frames, frames)
    return np.linalg.det(gram)


def jacobi_rk4_zeros(kappa, horizon, h):
    """Zeros in (0, horizon) of the solution of J'' + kappa J = 0, J(0)=0, J'(0)=1.

    Classical RK4 with step ``h``; each sign change is refined on the cubic
    Hermite interpolant built from (J, J') at the bracketing steps.
    """
    kappa = float(kappa)
    nsteps = int(math.ceil(horizon / h))
    zeros = []
    y, v = 0.0, 1.0
    t = 0.0
    for _ in range(nsteps):
        k1y, k1v = v, -kappa * y
        k2y, k2v = v + 0.5 * h * k1v, -kappa * (y + 0.5 * h * k1y)
        k3y, k3v = v + 0.5 * h * k2v, -kappa * (y + 0.5 * h * k2y)
        k4y, k4v = v + h * k3v, -kappa * (y + h * k3y)
        y1 = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v1 = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t1 = t + h
        if t > 0.0 and (y == 0.0 or y * y1 < 0.0):
            root = t if y == 0.0 else _hermite_root(t, h, y, v, y1, v1)
            if root < horizon:
                zeros.append(root)
        y, v, t = y1, v1, t1
    return np.array(zeros, dtype=np.float64)


def _hermite_root(t, h, y0, v0, y1, v1):
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _hermite(mid, h, y0, v0, y1, v1) * y0 > 0.0:
            lo = mid
        else:
            hi = mid
    return t + h * 0.5 * (lo + hi)


def _hermite(s, h, y0, v0, y1, v1):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * v0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * v1)


# ---------------------------------------------------------------------------
# double-double Strang steps (vectorized over points)

_SPLIT = 134217729.0
_TWO_PI = (6.283185307179586, 2.4492935982947064e-16)
_NTERMS = 15


def _taylor_tables():
    from fractions import Fraction

    sin_t, cos_t = [], []
    for k in range(_NTERMS):
        for n, out in ((2 * k + 1, sin_t), (2 * k, cos_t)):
            c = Fraction((-1) ** k, math.factorial(n))
            hi = float(c)
            out.append((hi, float(c - Fraction(hi))))
    return sin_t, cos_t


_SIN_T, _COS_T = _taylor_tables()


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(a, b):
    s, e = _two_sum(a[0], b[0])
    t, f = _two_sum(a[1], b[1])
    s, e = _quick_two_sum(s, e + t)
    return _quick_two_sum(s, e + f)


def _dd_mul(a, b):
    p, e = _two_prod(a[0], b[0])
    return _quick_two_sum(p, e + (a[0] * b[1] + a[1] * b[0]))


def _dd_div_d(a, b):
    q1 = a[0] / b
    p, e = _two_prod(q1, b)
    s = _dd_add(a, (-p, -e))
    return _quick_two_sum(q1, s[0] / b)


def _sincos_turns(r):
    """sin and cos of 2 pi r for a double-double r; exact at multiples of 1/4."""
    n = np.floor(r[0] + 0.5)
    u = _dd_add(r, (-n, 0.0 * n))
    j = np.floor(4.0 * u[0] + 0.5)
    u = _dd_add(u, (-0.25 * j, 0.0 * j))
    x = _dd_mul(u, _TWO_PI)
    x2 = _dd_mul(x, x)
    a = _SIN_T[-1]
    b = _COS_T[-1]
    for k in range(_NTERMS - 2, -1, -1):
        a = _dd_add(_dd_mul(a, x2), _SIN_T[k])
        b = _dd_add(_dd_mul(b, x2), _COS_T[k])
    a = _dd_mul(a, x)
    quad = j.astype(np.int64) & 3
    sh = np.choose(quad, [a[0], b[0], -a[0], -b[0]])
    sl = np.choose(quad, [a[1], b[1], -a[1], -b[1]])
    ch = np.choose(quad, [b[0], -a[0], -b[0], a[0]])
    cl = np.choose(quad, [b[1], -a[1], -b[1], a[1]])
    return (sh, sl), (ch, cl)


def _fourier_dd(q, cos_c, sin_c, weights, length):
    zero = np.zeros_like(q[0])
    dv = (zero, zero)
    for k in range(1, len(cos_c)):
        if cos_c[k] == 0.0 and sin_c[k] == 0.0:
            continue
        r = q
        if k != 1:
            r = _dd_mul(r, (float(k), 0.0))
        if length != 1.0:
            r = _dd_div_d(r, length)
        s, c = _sincos_turns(r)
        t = _dd_mul(s, (-cos_c[k], 0.0))
        if sin_c[k] != 0.0:
            t = _dd_add(t, _dd_mul(c, (sin_c[k], 0.0)))
        dv = _dd_add(dv, _dd_mul(t, weights[k]))
    return dv


def strang_fourier_dd(q_hi, q_lo, p_hi, p_lo, cos_c, sin_c, length, modulation, t0, h, nsteps):
    """Same steps as ``strang_fourier`` carried in double-double arithmetic.

    Positions and momenta are ``(hi, lo)`` pairs. Sines are evaluated in turns,
    so potentials are exactly stationary at their lattice critical points.
    """
    q = (np.array(q_hi, dtype=np.float64), np.array(q_lo, dtype=np.float64))
    p = (np.array(p_hi, dtype=np.float64), np.array(p_lo, dtype=np.float64))
    cos_c = [float(c) for c in cos_c]
    sin_c = [float(c) for c in sin_c]
    weights = [None] + [_dd_div_d(_dd_mul(_TWO_PI, (float(k), 0.0)), length)
                        for k in range(1, len(cos_c))]
    if nsteps <= 0:
        return q[0], q[1], p[0], p[1]

    def kick(t, c, q, p):
        g = c * (1.0 + modulation * math.sin(2.0 * math.pi * t))
        dv = _fourier_dd(q, cos_c, sin_c, weights, length)
        return _dd_add(p, _dd_mul(dv, (-g, 0.0)))

    p = kick(t0, 0.5 * h, q, p)
    for step in range(1, nsteps + 1):
        q = _dd_add(q, _dd_mul(p, (h, 0.0)))
        coef = 0.5 * h if step == nsteps else h
        p = kick(t0 + step * h, coef, q, p)
    return q[0], q[1], p[0], p[1]


def dd_lerp(a, b, t):
    """``a + t (b - a)`` as a double-double pair for points ``a, b`` and parameters ``t``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)[..., None]
    d = _two_sum(b, -a)
    step = _dd_mul((t, np.zeros_like(t)), d)
    return _dd_add((a + 0.0 * t, np.zeros_like(t * a)), step)
