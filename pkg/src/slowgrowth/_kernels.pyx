# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Semantics mirror ``_pykernels`` exactly."""
import numpy as np

from libc.math cimport sin, cos, fabs, ceil, floor, M_PI

BACKEND = "compiled"


cdef inline void _fourier(double q, const double[::1] cos_c, const double[::1] sin_c,
                          double wave, double* dv, double* ddv) noexcept nogil:
    cdef Py_ssize_t k
    cdef double kw, c, s
    dv[0] = 0.0
    ddv[0] = 0.0
    for k in range(1, cos_c.shape[0]):
        kw = k * wave
        c = cos(kw * q)
        s = sin(kw * q)
        dv[0] += kw * (-cos_c[k] * s + sin_c[k] * c)
        ddv[0] -= kw * kw * (cos_c[k] * c + sin_c[k] * s)


def strang_fourier(q, p, cos_c, sin_c, double length, double modulation,
                   double t0, double h, long nsteps, bint with_jacobian):
    cdef double[::1] qv = np.array(q, dtype=np.float64, copy=True)
    cdef double[::1] pv = np.array(p, dtype=np.float64, copy=True)
    cdef const double[::1] cc = np.ascontiguousarray(cos_c, dtype=np.float64)
    cdef const double[::1] sc = np.ascontiguousarray(sin_c, dtype=np.float64)
    cdef Py_ssize_t n = qv.shape[0]
    cdef Py_ssize_t j
    cdef long step
    cdef double wave = 2.0 * M_PI / length
    cdef double qq, pp, m11, m12, m21, m22, dv, ddv, g, coef, k, t
    jac_arr = np.zeros((n, 2, 2), dtype=np.float64)
    cdef double[:, :, ::1] jac = jac_arr
    with nogil:
        for j in range(n):
            qq = qv[j]
            pp = pv[j]
            m11 = 1.0
            m12 = 0.0
            m21 = 0.0
            m22 = 1.0
            if nsteps > 0:
                _fourier(qq, cc, sc, wave, &dv, &ddv)
                g = 0.5 * h * (1.0 + modulation * sin(2.0 * M_PI * t0))
                pp -= g * dv
                if with_jacobian:
                    k = -g * ddv
                    m21 += k * m11
                    m22 += k * m12
                for step in range(1, nsteps + 1):
                    qq += h * pp
                    if with_jacobian:
                        m11 += h * m21
                        m12 += h * m22
                    coef = 0.5 * h if step == nsteps else h
                    t = t0 + step * h
                    _fourier(qq, cc, sc, wave, &dv, &ddv)
                    g = coef * (1.0 + modulation * sin(2.0 * M_PI * t))
                    pp -= g * dv
                    if with_jacobian:
                        k = -g * ddv
                        m21 += k * m11
                        m22 += k * m12
            qv[j] = qq
            pv[j] = pp
            jac[j, 0, 0] = m11
            jac[j, 0, 1] = m12
            jac[j, 1, 0] = m21
            jac[j, 1, 1] = m22
    return np.asarray(qv), np.asarray(pv), (jac_arr if with_jacobian else None)


def gram_det(frames):
    cdef const double[:, :, ::1] f = np.ascontiguousarray(frames, dtype=np.float64)
    cdef Py_ssize_t ncell = f.shape[0]
    cdef Py_ssize_t dim = f.shape[1]
    cdef Py_ssize_t amb = f.shape[2]
    if dim > 8:
        raise ValueError("gram_det supports cube dimension <= 8")
    out_arr = np.empty(ncell, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double g[8][8]
    cdef Py_ssize_t c, a, b, e, piv, col, row
    cdef double acc, det, best, tmp, factor
    with nogil:
        for c in range(ncell):
            for a in range(dim):
                for b in range(a, dim):
                    acc = 0.0
                    for e in range(amb):
                        acc += f[c, a, e] * f[c, b, e]
                    g[a][b] = acc
                    g[b][a] = acc
            det = 1.0
            for col in range(dim):
                piv = col
                best = fabs(g[col][col])
                for row in range(col + 1, dim):
                    if fabs(g[row][col]) > best:
                        best = fabs(g[row][col])
                        piv = row
                if best == 0.0:
                    det = 0.0
                    break
                if piv != col:
                    for e in range(dim):
                        tmp = g[col][e]
                        g[col][e] = g[piv][e]
                        g[piv][e] = tmp
                    det = -det
                det *= g[col][col]
                for row in range(col + 1, dim):
                    factor = g[row][col] / g[col][col]
                    for e in range(col, dim):
                        g[row][e] -= factor * g[col][e]
            out[c] = det
    return out_arr


cdef inline double _hermite(double s, double h, double y0, double v0,
                            double y1, double v1) noexcept nogil:
    cdef double s2 = s * s
    cdef double s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * v0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * v1)


def jacobi_rk4_zeros(double kappa, double horizon, double h):
    cdef long nsteps = <long>ceil(horizon / h)
    cdef long i
    cdef int it
    cdef double y = 0.0, v = 1.0, t = 0.0
    cdef double k1y, k1v, k2y, k2v, k3y, k3v, k4y, k4v, y1, v1, lo, hi, mid, root
    zeros = []
    for i in range(nsteps):
        k1y = v
        k1v = -kappa * y
        k2y = v + 0.5 * h * k1v
        k2v = -kappa * (y + 0.5 * h * k1y)
        k3y = v + 0.5 * h * k2v
        k3v = -kappa * (y + 0.5 * h * k2y)
        k4y = v + h * k3v
        k4v = -kappa * (y + h * k3y)
        y1 = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v1 = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if t > 0.0 and (y == 0.0 or y * y1 < 0.0):
            if y == 0.0:
                root = t
            else:
                lo = 0.0
                hi = 1.0
                for it in range(60):
                    mid = 0.5 * (lo + hi)
                    if _hermite(mid, h, y, v, y1, v1) * y > 0.0:
                        lo = mid
                    else:
                        hi = mid
                root = t + h * 0.5 * (lo + hi)
            if root < horizon:
                zeros.append(root)
        y = y1
        v = v1
        t = t + h
    return np.array(zeros, dtype=np.float64)


# ---------------------------------------------------------------------------
# double-double Strang steps (about 32 significant digits)

cdef double _SPLIT = 134217729.0
cdef double _TWO_PI_HI = 6.283185307179586
cdef double _TWO_PI_LO = 2.4492935982947064e-16
DEF _NTERMS = 15
cdef double _SIN_HI[_NTERMS]
cdef double _SIN_LO[_NTERMS]
cdef double _COS_HI[_NTERMS]
cdef double _COS_LO[_NTERMS]


def _taylor_tables():
    from fractions import Fraction
    from math import factorial
    out = []
    for k in range(_NTERMS):
        row = []
        for n in (2 * k + 1, 2 * k):
            c = Fraction((-1) ** k, factorial(n))
            hi = float(c)
            row += [hi, float(c - Fraction(hi))]
        out.append(row)
    return out


for _k, (_sh, _sl, _ch, _cl) in enumerate(_taylor_tables()):
    _SIN_HI[_k] = _sh
    _SIN_LO[_k] = _sl
    _COS_HI[_k] = _ch
    _COS_LO[_k] = _cl


cdef inline void _two_sum(double a, double b, double* s, double* e) noexcept nogil:
    cdef double bb
    s[0] = a + b
    bb = s[0] - a
    e[0] = (a - (s[0] - bb)) + (b - bb)


cdef inline void _quick_two_sum(double a, double b, double* s, double* e) noexcept nogil:
    s[0] = a + b
    e[0] = b - (s[0] - a)


cdef inline void _two_prod(double a, double b, double* p, double* e) noexcept nogil:
    cdef double t, ah, al, bh, bl
    p[0] = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    e[0] = ((ah * bh - p[0]) + ah * bl + al * bh) + al * bl


cdef inline void _dd_add(double ah, double al, double bh, double bl,
                         double* rh, double* rl) noexcept nogil:
    cdef double s, e, t, f
    _two_sum(ah, bh, &s, &e)
    _two_sum(al, bl, &t, &f)
    e += t
    _quick_two_sum(s, e, &s, &e)
    e += f
    _quick_two_sum(s, e, rh, rl)


cdef inline void _dd_mul(double ah, double al, double bh, double bl,
                         double* rh, double* rl) noexcept nogil:
    cdef double p, e
    _two_prod(ah, bh, &p, &e)
    e += ah * bl + al * bh
    _quick_two_sum(p, e, rh, rl)


cdef inline void _dd_div_d(double ah, double al, double b, double* rh, double* rl) noexcept nogil:
    cdef double q1, q2, p, e, sh, sl
    q1 = ah / b
    _two_prod(q1, b, &p, &e)
    _dd_add(ah, al, -p, -e, &sh, &sl)
    q2 = sh / b
    _quick_two_sum(q1, q2, rh, rl)


cdef void _sincos_turns(double rh, double rl, double* sh, double* sl,
                        double* ch, double* cl) noexcept nogil:
    """sin and cos of 2 pi r for a double-double r; exact at multiples of 1/4."""
    cdef double n, j, uh, ul, xh, xl, x2h, x2l, th, tl, ah, al, bh, bl
    cdef int k, quad
    n = floor(rh + 0.5)
    _dd_add(rh, rl, -n, 0.0, &uh, &ul)
    j = floor(4.0 * uh + 0.5)
    _dd_add(uh, ul, -0.25 * j, 0.0, &uh, &ul)
    _dd_mul(uh, ul, _TWO_PI_HI, _TWO_PI_LO, &xh, &xl)
    _dd_mul(xh, xl, xh, xl, &x2h, &x2l)
    # Horner in x^2 for sin(x)/x and cos(x), |x| <= pi/4
    ah = _SIN_HI[_NTERMS - 1]
    al = _SIN_LO[_NTERMS - 1]
    bh = _COS_HI[_NTERMS - 1]
    bl = _COS_LO[_NTERMS - 1]
    for k in range(_NTERMS - 2, -1, -1):
        _dd_mul(ah, al, x2h, x2l, &th, &tl)
        _dd_add(th, tl, _SIN_HI[k], _SIN_LO[k], &ah, &al)
        _dd_mul(bh, bl, x2h, x2l, &th, &tl)
        _dd_add(th, tl, _COS_HI[k], _COS_LO[k], &bh, &bl)
    _dd_mul(ah, al, xh, xl, &ah, &al)
    quad = (<int>j) & 3
    if quad == 0:
        sh[0] = ah; sl[0] = al; ch[0] = bh; cl[0] = bl
    elif quad == 1:
        sh[0] = bh; sl[0] = bl; ch[0] = -ah; cl[0] = -al
    elif quad == 2:
        sh[0] = -ah; sl[0] = -al; ch[0] = -bh; cl[0] = -bl
    else:
        sh[0] = -bh; sl[0] = -bl; ch[0] = ah; cl[0] = al


cdef void _fourier_dd(double qh, double ql, const double[::1] cos_c, const double[::1] sin_c,
                      const double[::1] w_hi, const double[::1] w_lo, double length,
                      double* dvh, double* dvl) noexcept nogil:
    cdef Py_ssize_t k
    cdef double rh, rl, sh, sl, ch, cl, th, tl
    dvh[0] = 0.0
    dvl[0] = 0.0
    for k in range(1, cos_c.shape[0]):
        if cos_c[k] == 0.0 and sin_c[k] == 0.0:
            continue
        # r = k q / L in turns
        rh = qh
        rl = ql
        if k != 1:
            _dd_mul(rh, rl, <double>k, 0.0, &rh, &rl)
        if length != 1.0:
            _dd_div_d(rh, rl, length, &rh, &rl)
        _sincos_turns(rh, rl, &sh, &sl, &ch, &cl)
        # V' = (2 pi k / L) (-a_k sin + b_k cos)
        _dd_mul(sh, sl, -cos_c[k], 0.0, &th, &tl)
        if sin_c[k] != 0.0:
            _dd_mul(ch, cl, sin_c[k], 0.0, &sh, &sl)
            _dd_add(th, tl, sh, sl, &th, &tl)
        _dd_mul(th, tl, w_hi[k], w_lo[k], &th, &tl)
        _dd_add(dvh[0], dvl[0], th, tl, dvh, dvl)


def strang_fourier_dd(q_hi, q_lo, p_hi, p_lo, cos_c, sin_c, double length, double modulation,
                      double t0, double h, long nsteps):
    cdef double[::1] qh = np.array(q_hi, dtype=np.float64, copy=True)
    cdef double[::1] ql = np.array(q_lo, dtype=np.float64, copy=True)
    cdef double[::1] ph = np.array(p_hi, dtype=np.float64, copy=True)
    cdef double[::1] pl = np.array(p_lo, dtype=np.float64, copy=True)
    cdef const double[::1] cc = np.ascontiguousarray(cos_c, dtype=np.float64)
    cdef const double[::1] sc = np.ascontiguousarray(sin_c, dtype=np.float64)
    cdef Py_ssize_t n = qh.shape[0]
    cdef Py_ssize_t j
    cdef long step
    cdef double a, b, c, d, dvh, dvl, g, coef, th, tl
    cdef Py_ssize_t k
    wh_arr = np.zeros(cc.shape[0])
    wl_arr = np.zeros(cc.shape[0])
    cdef double[::1] wh = wh_arr
    cdef double[::1] wl = wl_arr
    for k in range(1, cc.shape[0]):
        _dd_mul(_TWO_PI_HI, _TWO_PI_LO, <double>k, 0.0, &th, &tl)
        _dd_div_d(th, tl, length, &wh[k], &wl[k])
    with nogil:
        for j in range(n):
            a = qh[j]
            b = ql[j]
            c = ph[j]
            d = pl[j]
            if nsteps > 0:
                _fourier_dd(a, b, cc, sc, wh, wl, length, &dvh, &dvl)
                g = 0.5 * h * (1.0 + modulation * sin(2.0 * M_PI * t0))
                _dd_mul(dvh, dvl, -g, 0.0, &th, &tl)
                _dd_add(c, d, th, tl, &c, &d)
                for step in range(1, nsteps + 1):
                    _dd_mul(c, d, h, 0.0, &th, &tl)
                    _dd_add(a, b, th, tl, &a, &b)
                    coef = 0.5 * h if step == nsteps else h
                    g = coef * (1.0 + modulation * sin(2.0 * M_PI * (t0 + step * h)))
                    _fourier_dd(a, b, cc, sc, wh, wl, length, &dvh, &dvl)
                    _dd_mul(dvh, dvl, -g, 0.0, &th, &tl)
                    _dd_add(c, d, th, tl, &c, &d)
            qh[j] = a
            ql[j] = b
            ph[j] = c
            pl[j] = d
    return np.asarray(qh), np.asarray(ql), np.asarray(ph), np.asarray(pl)
