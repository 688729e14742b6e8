"""Independent oracle for witness volumes on the 4-ball.

Reimplements the plateau profile and the rotation map from scratch, confirms
the closed-form density against a finite-difference Gram determinant, then
integrates the density with scipy. The 3-cube integral uses the fact that the
density depends on ``t1`` and ``t2^2 + t3^2`` only: the square ``[0, s]^2`` is
swept by quarter circles of radius ``rho`` whose length inside the square is
``rho (pi/2 - 2 arccos(s / rho))`` for ``rho > s``.

Run as a script to print the values frozen into the tests.
"""
import math

import numpy as np
from scipy import integrate

A, B = 0.125, 0.875
KNEE = A + (B - A) / 8
SHARE = 0.9


def _s2(u):
    if u <= 0 or u >= 1:
        return 0.0
    return 60 * u * (1 - u) * (1 - 2 * u)


def _s1(u):
    u = min(max(u, 0.0), 1.0)
    return 30 * u * u * (1 - u) ** 2


def fprime(r):
    return -(SHARE * _s1((r - A) / (KNEE - A)) / (KNEE - A)
             + (1 - SHARE) * _s1((r - A) / (B - A)) / (B - A))


def fsecond(r):
    return -(SHARE * _s2((r - A) / (KNEE - A)) / (KNEE - A) ** 2
             + (1 - SHARE) * _s2((r - A) / (B - A)) / (B - A) ** 2)


def rotate(x, n):
    th = 2 * n * fprime(float(x @ x))
    c, s = math.cos(th), math.sin(th)
    return np.array([c * x[0] - s * x[1], s * x[0] + c * x[1],
                     c * x[2] - s * x[3], s * x[2] + c * x[3]])


SLOTS = {1: [0], 2: [0, 2], 3: [0, 2, 3]}


def fd_density(i, t, n, eps=1e-8):
    def emb(u):
        x = np.zeros(4)
        x[SLOTS[i]] = u
        return x
    cols = []
    for k in range(i):
        e = np.zeros(i)
        e[k] = eps
        cols.append((rotate(emb(t + e), n) - rotate(emb(t - e), n)) / (2 * eps))
    F = np.array(cols)
    return math.sqrt(np.linalg.det(F @ F.T))


def density(i, t, n):
    t = np.asarray(t, dtype=float)
    T = float(t @ t)
    s = t[0] ** 2 if i % 2 else t[0] ** 2 + t[1] ** 2
    return math.sqrt(1 + 16 * n * n * fsecond(T) ** 2 * s * T)


def _breaks(lo, hi, offset=0.0):
    pts = [lo, hi]
    for r in (A, KNEE, B):
        v = r - offset
        if v > 0 and lo < math.sqrt(v) < hi:
            pts.append(math.sqrt(v))
    return sorted(pts)


def volume(i, n):
    side = 1.0 / (i + 1)
    opts = dict(epsabs=0, epsrel=1e-10, limit=400)
    if i == 1:
        f = lambda t: density(1, [t], n)
        return sum(integrate.quad(f, a, b, **opts)[0] for a, b in zip(_breaks(0, side)[:-1], _breaks(0, side)[1:]))
    if i == 2:
        # polar coordinates over the square [0, s]^2; density depends on rho only
        def ring(rho):
            T = rho * rho
            dens = math.sqrt(1 + 16 * n * n * fsecond(T) ** 2 * T * T)
            arc = math.pi / 2 if rho <= side else math.pi / 2 - 2 * math.acos(side / rho)
            return dens * rho * arc
        pts = _breaks(0, side * math.sqrt(2)) + [side]
        pts = sorted(set(pts))
        return sum(integrate.quad(ring, a, b, **opts)[0] for a, b in zip(pts[:-1], pts[1:]))
    if i == 3:
        def inner(t1):
            def ring(rho):
                T = t1 * t1 + rho * rho
                dens = math.sqrt(1 + 16 * n * n * fsecond(T) ** 2 * t1 * t1 * T)
                arc = math.pi / 2 if rho <= side else math.pi / 2 - 2 * math.acos(side / rho)
                return dens * rho * arc
            pts = sorted(set(_breaks(0, side * math.sqrt(2), t1 * t1) + [side]))
            return sum(integrate.quad(ring, a, b, epsabs=0, epsrel=1e-9, limit=200)[0]
                       for a, b in zip(pts[:-1], pts[1:]))
        return integrate.quad(inner, 0, side, epsabs=0, epsrel=1e-8, limit=200)[0]
    raise ValueError(i)


if __name__ == "__main__":
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in (1, 2, 3):
        for n in (1, 38, 512):
            for _ in range(20):
                t = rng.uniform(0, 1 / (i + 1), i)
                worst = max(worst, abs(fd_density(i, t, n) / density(i, t, n) - 1))
    print("closed form vs finite-difference Gram:", worst)
    for i in (1, 2, 3):
        for n in (1, 8, 38, 512):
            print(i, n, repr(volume(i, n)), flush=True)
