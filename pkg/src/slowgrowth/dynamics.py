"""Symplectic maps with closed-form or split-step application and Jacobians.

All maps act on batches of ambient points (coordinate axis last). Jacobians
are returned in the model's symplectic frame (see
``PhaseSpaceModel.symplectic_frame``), so ``J.T @ Omega @ J == Omega`` with the
standard ``Omega`` and the 2-norm is the operator norm for the
horizontal/vertical split metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import DomainError
from .geometry import (
    NUM_TOL,
    POINT_TOL,
    CylinderTS1,
    EuclideanBall,
    PhaseSpaceModel,
    RoundSphereCotangent,
    tangent_basis,
)

SYMPL_TOL = 1e-8


# ---------------------------------------------------------------------------
# profiles


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def _smoothstep_d1(u):
    u = np.clip(u, 0.0, 1.0)
    return 30.0 * u * u * (1.0 - u) ** 2


def _smoothstep_d2(u):
    u = np.clip(u, 0.0, 1.0)
    return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)


def _smoothstep_int(u):
    """Antiderivative of the quintic smoothstep, zero at 0."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 4 * (2.5 - 3.0 * u + u * u)


@dataclass(frozen=True)
class TwistProfile:
    """Radial profile ``f`` with ``f = 0`` on ``[0, r0]`` and ``f' = 1`` on ``[r1, inf)``.

    ``kind="generic"``: ``f'`` is the quintic smoothstep across ``[r0, r1]``.
    ``kind="floer"``: ``r0, r1 = 1/3, 2/3`` and ``f'(r) = sin^2(pi (3r - 1) / 2)``
    there, so ``f''`` is strictly positive on the open interval.
    """

    r0: float = 0.25
    r1: float = 0.75
    kind: str = "generic"

    def __post_init__(self):
        if not 0.0 < self.r0 < self.r1 <= 1.0:
            raise DomainError("twist profile needs 0 < r0 < r1 <= 1")
        if self.kind not in ("generic", "floer"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.kind == "floer" and (abs(self.r0 - 1 / 3) > NUM_TOL or abs(self.r1 - 2 / 3) > NUM_TOL):
            raise DomainError("the Floer profile has knots 1/3 and 2/3")

    @classmethod
    def generic(cls, r0: float = 0.25, r1: float = 0.75) -> "TwistProfile":
        return cls(r0, r1, "generic")

    @classmethod
    def floer(cls) -> "TwistProfile":
        return cls(1.0 / 3.0, 2.0 / 3.0, "floer")

    @property
    def width(self) -> float:
        return self.r1 - self.r0

    def _u(self, r):
        return (np.asarray(r, dtype=np.float64) - self.r0) / self.width

    def value(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "generic":
            ramp = self.width * _smoothstep_int(self._u(r))
            plateau = 0.5 * self.width
        else:
            s = np.clip(r, self.r0, self.r1)
            ramp = 0.5 * (s - self.r0) - np.sin(math.pi * (3.0 * s - 1.0)) / (6.0 * math.pi)
            plateau = 0.5 * self.width
        return np.where(r >= self.r1, plateau + (r - self.r1), ramp)

    def d1(self, r):
        if self.kind == "generic":
            return _smoothstep(self._u(r))
        s = np.clip(np.asarray(r, dtype=np.float64), self.r0, self.r1)
        return np.sin(0.5 * math.pi * (3.0 * s - 1.0)) ** 2

    def d2(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "generic":
            return _smoothstep_d1(self._u(r)) / self.width
        inside = (r > self.r0) & (r < self.r1)
        return np.where(inside, 1.5 * math.pi * np.sin(math.pi * (3.0 * r - 1.0)), 0.0)

    def max_d2(self) -> float:
        return 1.875 / self.width if self.kind == "generic" else 1.5 * math.pi


@dataclass(frozen=True)
class PlateauProfile:
    """Decreasing profile with ``f = 1`` exactly on ``[0, a]`` and ``f = 0`` exactly on ``[b, inf)``.

    Used as ``H(x) = f(|x|^2)`` on a ball of real dimension ``2N`` with
    ``a = 1/(4N)`` and ``b = 1 - 1/(4N)``. Between the knots
    ``f = 1 - share * S((r - a)/(knee - a)) - (1 - share) * S((r - a)/(b - a))``
    with ``S`` the quintic smoothstep; without a knee ``f = 1 - S((r - a)/(b - a))``.
    Front-loading the drop puts curvature where the small witness cubes live,
    so linear growth dominates the constant term early.
    """

    a: float
    b: float
    knee: float | None = None
    share: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.a < self.b:
            raise DomainError("plateau profile needs 0 < a < b")
        if self.knee is not None and not self.a < self.knee <= self.b:
            raise DomainError("knee must lie in (a, b]")
        if not 0.0 <= self.share <= 1.0:
            raise DomainError("share must lie in [0, 1]")

    @classmethod
    def for_ball(cls, dim: int) -> "PlateauProfile":
        n = dim // 2
        a, b = 1.0 / (4 * n), 1.0 - 1.0 / (4 * n)
        return cls(a, b, a + (b - a) / 8.0)

    @property
    def width(self) -> float:
        return self.b - self.a

    def _parts(self):
        if self.knee is None:
            return ((1.0, self.width),)
        return ((self.share, self.knee - self.a), (1.0 - self.share, self.width))

    def value(self, r):
        r = np.asarray(r, dtype=np.float64)
        return 1.0 - sum(w * _smoothstep((r - self.a) / h) for w, h in self._parts())

    def d1(self, r):
        r = np.asarray(r, dtype=np.float64)
        return -sum(w * _smoothstep_d1((r - self.a) / h) / h for w, h in self._parts())

    def d2(self, r):
        r = np.asarray(r, dtype=np.float64)
        return -sum(w * _smoothstep_d2((r - self.a) / h) / h ** 2 for w, h in self._parts())


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class RadialBall:
    """Time-n map of ``f(|x|^2)``: rotate each complex coordinate by ``2 f'(|x|^2) n``."""

    profile: PlateauProfile
    model: EuclideanBall = field(default_factory=EuclideanBall)

    variant = "RadialBall"

    @classmethod
    def for_ball(cls, dim: int = 4) -> "RadialBall":
        return cls(PlateauProfile.for_ball(dim), EuclideanBall(dim))

    @property
    def support_radius(self) -> float:
        return math.sqrt(self.profile.b)

    def angle(self, x, n):
        r2 = np.sum(np.asarray(x) ** 2, axis=-1)
        return 2.0 * self.profile.d1(r2) * n

    def apply(self, x, n: int, **_):
        x = self.model.check_points(x)
        theta = self.angle(x, n)
        c, s = np.cos(theta), np.sin(theta)
        out = np.empty_like(x)
        xs, ys = x[..., 0::2], x[..., 1::2]
        out[..., 0::2] = c[..., None] * xs - s[..., None] * ys
        out[..., 1::2] = s[..., None] * xs + c[..., None] * ys
        return out

    def ambient_jacobian(self, x, n: int):
        x = self.model.check_points(x)
        dim = x.shape[-1]
        r2 = np.sum(x * x, axis=-1)
        theta = 2.0 * self.profile.d1(r2) * n
        grad = (4.0 * n * self.profile.d2(r2))[..., None] * x
        c, s = np.cos(theta), np.sin(theta)
        rot = np.zeros(x.shape[:-1] + (dim, dim))
        for k in range(0, dim, 2):
            rot[..., k, k] = c
            rot[..., k, k + 1] = -s
            rot[..., k + 1, k] = s
            rot[..., k + 1, k + 1] = c
        jx = np.empty_like(x)
        jx[..., 0::2] = -x[..., 1::2]
        jx[..., 1::2] = x[..., 0::2]
        inner = np.eye(dim) + jx[..., :, None] * grad[..., None, :]
        return rot @ inner


@dataclass(frozen=True)
class Twist:
    """Power ``m`` of the twist: time-``m`` map of ``f(|p|)`` on a period-1 cotangent model.

    On the cylinder of length ``L`` the flow is normalised to period 1 as well,
    so one iterate moves ``q`` by ``m L f'(|p|) sign(p)``.
    """

    model: PhaseSpaceModel
    profile: TwistProfile = field(default_factory=TwistProfile)
    m: int = 1

    variant = "Twist"

    def __post_init__(self):
        if not isinstance(self.model, (CylinderTS1, RoundSphereCotangent)):
            raise DomainError("twists live on the cylinder or the sphere cotangent model")
        if int(self.m) != self.m or self.m == 0:
            raise DomainError("twist power must be a nonzero integer")

    @property
    def support_radius(self) -> float:
        return self.profile.r1

    def _time(self, r, n):
        return self.m * n * self.profile.d1(r)

    def apply(self, x, n: int, wrap: bool = True):
        x = self.model.check_points(x)
        if isinstance(self.model, CylinderTS1):
            q, p = x[..., 0], x[..., 1]
            length = self.model.length
            # reduce the time first so whole turns give an exact zero shift
            shift = np.fmod(self._time(np.abs(p), n), 1.0) * length * np.sign(p)
            out = x.copy()
            if wrap:
                out[..., 0] = np.where(shift == 0.0, q, np.mod(q + shift, length))
            else:
                out[..., 0] = q + self._time(np.abs(p), n) * length * np.sign(p)
            return out
        model: RoundSphereCotangent = self.model
        q, p = model.split(x)
        r = np.linalg.norm(p, axis=-1)
        t = self._time(r, n)
        a = 2.0 * math.pi * np.fmod(t, 1.0)
        c, s = np.cos(a)[..., None], np.sin(a)[..., None]
        rho = model.rho
        phat = p / np.where(r > 0, r, 1.0)[..., None]
        q_new = c * q + s * rho * phat
        p_new = -s * (r[..., None] / rho) * q + c * p
        return np.concatenate([q_new, p_new], axis=-1)

    def ambient_jacobian(self, x, n: int):
        x = self.model.check_points(x)
        if isinstance(self.model, CylinderTS1):
            p = x[..., 1]
            jac = np.zeros(x.shape[:-1] + (2, 2))
            jac[..., 0, 0] = 1.0
            jac[..., 1, 1] = 1.0
            jac[..., 0, 1] = self.m * n * self.model.length * self.profile.d2(np.abs(p))
            return jac
        model: RoundSphereCotangent = self.model
        q, p = model.split(x)
        m = model.d + 1
        rho = model.rho
        r = np.linalg.norm(p, axis=-1)
        rs = np.where(r > 0, r, 1.0)
        phat = p / rs[..., None]
        t = self._time(r, n)
        a = 2.0 * math.pi * np.fmod(t, 1.0)
        c, s = np.cos(a), np.sin(a)
        da = 2.0 * math.pi * self.m * n * self.profile.d2(r)   # d angle / d r
        eye = np.eye(m)
        # d r / d p = phat ; d phat / d p = (I - phat phat^T) / r
        dphat = (eye - phat[..., :, None] * phat[..., None, :]) / rs[..., None, None]
        dir_q = -s[..., None] * q + c[..., None] * rho * phat            # d q_new / d a
        dir_p = -c[..., None] * (r[..., None] / rho) * q - s[..., None] * p  # d p_new / d a
        dq_dq = c[..., None, None] * eye
        dq_dp = (s[..., None, None] * rho * dphat
                 + dir_q[..., :, None] * (da[..., None] * phat)[..., None, :])
        dp_dq = -(s * r / rho)[..., None, None] * eye
        dp_dp = (c[..., None, None] * eye
                 - (s / rho)[..., None, None] * q[..., :, None] * phat[..., None, :]
                 + dir_p[..., :, None] * (da[..., None] * phat)[..., None, :])
        top = np.concatenate([dq_dq, dq_dp], axis=-1)
        bottom = np.concatenate([dp_dq, dp_dp], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


@dataclass(frozen=True)
class CosineBump:
    """``h(p) = amplitude * cos^2(pi (p - centre) / (2 half_width))`` on ``|p - centre| < half_width``."""

    amplitude: float = 0.5
    centre: float = 0.0
    half_width: float = 0.5

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("bump half width must be positive")

    def value(self, p):
        z = (np.asarray(p, dtype=np.float64) - self.centre) / self.half_width
        return np.where(np.abs(z) < 1.0, self.amplitude * np.cos(0.5 * math.pi * z) ** 2, 0.0)

    def d1(self, p):
        z = (np.asarray(p, dtype=np.float64) - self.centre) / self.half_width
        inside = np.abs(z) < 1.0
        return np.where(inside, -self.amplitude * 0.5 * math.pi / self.half_width
                        * np.sin(math.pi * z), 0.0)

    def integral(self) -> float:
        return self.amplitude * self.half_width


@dataclass(frozen=True)
class FiberShift:
    """``(q, p) -> (q + n h(p), p)`` on the cylinder: symplectic, not Hamiltonian when ``int h != 0``."""

    shift: CosineBump = field(default_factory=CosineBump)
    model: CylinderTS1 = field(default_factory=CylinderTS1)

    variant = "FiberShift"

    @property
    def support_radius(self) -> float:
        return abs(self.shift.centre) + self.shift.half_width

    def apply(self, x, n: int, wrap: bool = True):
        x = self.model.check_points(x)
        out = x.copy()
        q = x[..., 0] + n * self.shift.value(x[..., 1])
        out[..., 0] = np.mod(q, self.model.length) if wrap else q
        return out

    def ambient_jacobian(self, x, n: int):
        x = self.model.check_points(x)
        jac = np.zeros(x.shape[:-1] + (2, 2))
        jac[..., 0, 0] = 1.0
        jac[..., 1, 1] = 1.0
        jac[..., 0, 1] = n * self.shift.d1(x[..., 1])
        return jac


@dataclass(frozen=True)
class FourierPotential:
    """``V(t, q) = (1 + modulation sin 2 pi t) sum_k a_k cos(k w q) + b_k sin(k w q)``, ``w = 2 pi / L``.

    Coefficient tuples are indexed by harmonic; index 0 is ignored.
    """

    cos_coeffs: tuple = (0.0,)
    sin_coeffs: tuple = (0.0,)
    length: float = 1.0
    modulation: float = 0.0

    def __post_init__(self):
        n = max(len(self.cos_coeffs), len(self.sin_coeffs))
        object.__setattr__(self, "cos_coeffs", tuple(map(float, self.cos_coeffs)) + (0.0,) * (n - len(self.cos_coeffs)))
        object.__setattr__(self, "sin_coeffs", tuple(map(float, self.sin_coeffs)) + (0.0,) * (n - len(self.sin_coeffs)))

    @classmethod
    def pendulum(cls, modulation: float = 0.0) -> "FourierPotential":
        """``V = -cos(2 pi q) / (2 pi)^2`` on the circle of length 1."""
        return cls((0.0, -1.0 / (4.0 * math.pi ** 2)), (0.0, 0.0), 1.0, modulation)

    @property
    def autonomous(self) -> bool:
        return self.modulation == 0.0

    def _weight(self, t):
        return 1.0 + self.modulation * np.sin(2.0 * math.pi * np.asarray(t, dtype=np.float64))

    def static(self, q):
        q = np.asarray(q, dtype=np.float64)
        w = 2.0 * math.pi / self.length
        out = np.zeros_like(q)
        for k in range(1, len(self.cos_coeffs)):
            out += self.cos_coeffs[k] * np.cos(k * w * q) + self.sin_coeffs[k] * np.sin(k * w * q)
        return out

    def value(self, t, q):
        return self._weight(t) * self.static(q)

    def static_range(self, samples: int = 20001) -> tuple[float, float]:
        v = self.static(np.linspace(0.0, self.length, samples))
        return float(v.min()), float(v.max())


@dataclass(frozen=True)
class ClassicalHam:
    """Period map of ``H = |p - A|^2 / 2 + V(t, q)`` on the cylinder by Strang splitting.

    ``vector_potential`` is accepted in the data model but must be zero.
    One iterate is one unit of time, i.e. ``round(1/step)`` split steps.
    """

    potential: FourierPotential = field(default_factory=FourierPotential.pendulum)
    step: float = 1e-3
    vector_potential: tuple = ()
    model: CylinderTS1 = field(default_factory=CylinderTS1)

    variant = "ClassicalHam"

    def __post_init__(self):
        if abs(self.model.length - self.potential.length) > NUM_TOL:
            raise DomainError("potential period must match the circle length")
        steps = round(1.0 / self.step)
        if steps < 1 or abs(steps * self.step - 1.0) > 1e-12:
            raise DomainError("integrator step must divide the unit period")
        if any(float(a) != 0.0 for a in self.vector_potential):
            raise DomainError("magnetic terms (A != 0) are not supported")

    @property
    def steps_per_period(self) -> int:
        return round(1.0 / self.step)

    @property
    def support_radius(self) -> float:
        return math.inf

    def hamiltonian(self, t, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * x[..., 1] ** 2 + self.potential.value(t, x[..., 0])

    def flow(self, x, nsteps: int, t0: float = 0.0, with_jacobian: bool = False):
        """Advance ``nsteps`` split steps from time ``t0``; lifted coordinates."""
        x = self.model.check_points(x)
        flat = x.reshape(-1, 2)
        pot = self.potential
        q, p, jac = kernels.strang_fourier(
            np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]),
            np.asarray(pot.cos_coeffs), np.asarray(pot.sin_coeffs), float(pot.length),
            float(pot.modulation), float(t0), float(self.step), int(nsteps), bool(with_jacobian))
        out = np.stack([q, p], axis=-1).reshape(x.shape)
        if with_jacobian:
            return out, jac.reshape(x.shape[:-1] + (2, 2))
        return out

    def flow_precise(self, hi, lo, nsteps: int, t0: float = 0.0):
        """``flow`` in double-double arithmetic; points are ``(hi, lo)`` pairs of shape (N, 2)."""
        pot = self.potential
        qh, ql, ph, pl = kernels.strang_fourier_dd(
            np.ascontiguousarray(hi[:, 0]), np.ascontiguousarray(lo[:, 0]),
            np.ascontiguousarray(hi[:, 1]), np.ascontiguousarray(lo[:, 1]),
            np.asarray(pot.cos_coeffs), np.asarray(pot.sin_coeffs), float(pot.length),
            float(pot.modulation), float(t0), float(self.step), int(nsteps))
        return np.stack([qh, ph], axis=-1), np.stack([ql, pl], axis=-1)

    def apply(self, x, n: int, wrap: bool = True):
        out = self.flow(x, n * self.steps_per_period)
        return self.model.wrap(out) if wrap else out

    def ambient_jacobian(self, x, n: int):
        _, jac = self.flow(x, n * self.steps_per_period, with_jacobian=True)
        return jac


MapSpec = RadialBall | Twist | ClassicalHam | FiberShift


@dataclass(frozen=True)
class Identity:
    """The identity on a model; handy as a baseline."""

    model: PhaseSpaceModel

    variant = "Identity"
    support_radius = 0.0

    def apply(self, x, n: int, **_):
        return self.model.check_points(x).copy()

    def ambient_jacobian(self, x, n: int):
        x = self.model.check_points(x)
        return np.broadcast_to(np.eye(x.shape[-1]), x.shape[:-1] + (x.shape[-1],) * 2).copy()


# ---------------------------------------------------------------------------
# functional interface


def _check_n(n) -> int:
    if int(n) != n or n < 0:
        raise DomainError("iterate count must be a nonnegative integer")
    return int(n)


def apply(map_, point, n: int, wrap: bool = True) -> np.ndarray:
    """Image of ``point`` (or a batch) under the ``n``-th iterate."""
    n = _check_n(n)
    if n == 0:
        return map_.model.check_points(point).copy()
    return map_.apply(point, n, wrap=wrap)


def jacobian(map_, point, n: int) -> np.ndarray:
    """Derivative of the ``n``-th iterate in the model's symplectic frame, shape ``(..., 2d, 2d)``."""
    n = _check_n(n)
    model = map_.model
    x = model.check_points(point)
    if n == 0:
        k = 2 * model.half_dim
        return np.broadcast_to(np.eye(k), x.shape[:-1] + (k, k)).copy()
    amb = map_.ambient_jacobian(x, n)
    # only the sphere model has a point-dependent frame at the image
    y = map_.apply(x, n, wrap=False) if isinstance(model, RoundSphereCotangent) else x
    frame = model.symplectic_frame(x)
    return model.frame_coordinates(y, amb @ frame)


def operator_norm(jac: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a stack."""
    return np.linalg.svd(np.asarray(jac), compute_uv=False)[..., 0]


def standard_omega(k: int) -> np.ndarray:
    d = k // 2
    omega = np.zeros((k, k))
    omega[:d, d:] = np.eye(d)
    omega[d:, :d] = -np.eye(d)
    return omega


def symplectic_residual(jac: np.ndarray) -> np.ndarray:
    """``max |J^T Omega J - Omega|`` per matrix."""
    jac = np.asarray(jac)
    omega = standard_omega(jac.shape[-1])
    res = np.swapaxes(jac, -1, -2) @ omega @ jac - omega
    return np.max(np.abs(res), axis=(-2, -1))


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    times: np.ndarray
    points: np.ndarray       # lifted coordinates, shape (K, 2)
    winding: int
    residual: float
    iterations: int


def classical_orbit(map_: ClassicalHam, seed, tol: float = 1e-10, max_iter: int = 50,
                    winding: int = 0, samples: int = 200) -> PeriodicOrbit | None:
    """Newton search for a fixed point of the period map, then the sampled loop.

    ``winding`` is the number of turns the loop makes around the circle.
    Returns None when Newton fails to converge (not-found signal).
    """
    if not isinstance(map_, ClassicalHam):
        raise DomainError("classical_orbit needs a ClassicalHam map")
    x = map_.model.check_points(seed).astype(np.float64).copy()
    target = np.array([winding * map_.model.length, 0.0])
    residual = math.inf
    for it in range(1, max_iter + 1):
        y, jac = map_.flow(x, map_.steps_per_period, with_jacobian=True)
        f = y - x - target
        residual = float(np.linalg.norm(f))
        if residual < tol:
            break
        step, *_ = np.linalg.lstsq(jac - np.eye(2), -f, rcond=None)
        x = x + step
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e6:
            return None
    else:
        return None
    nsteps = map_.steps_per_period
    stride = max(1, nsteps // samples)
    pts = [x]
    times = [0.0]
    cur = x
    done = 0
    while done < nsteps:
        k = min(stride, nsteps - done)
        cur = map_.flow(cur, k, t0=done * map_.step)
        done += k
        pts.append(cur)
        times.append(done * map_.step)
    return PeriodicOrbit(np.array(times), np.array(pts), int(winding), residual, it)


def geodesic_return_time(model: RoundSphereCotangent, point, horizon: float = 2.5,
                         samples: int = 4001, tol: float = 1e-9) -> float:
    """First time ``t > 0`` at which the unit-speed geodesic flow returns to ``point``.

    Scans the closed-form great-circle flow on a grid and refines the first
    near-return by golden-section minimisation of the phase-space distance.
    """
    x = model.check_points(point)
    q, p = model.split(x)
    r = float(np.linalg.norm(p))
    if r == 0:
        raise DomainError("need a nonzero covector")
    phat = p / r

    def at(t):
        a = 2.0 * math.pi * np.asarray(t)[..., None]
        qt = np.cos(a) * q + np.sin(a) * model.rho * phat
        pt = -np.sin(a) * (r / model.rho) * q + np.cos(a) * p
        return np.sqrt(np.sum((qt - q) ** 2, -1) + np.sum((pt - p) ** 2, -1))

    grid = np.linspace(0.0, horizon, samples)
    dist = at(grid)
    h = grid[1] - grid[0]
    for j in range(1, samples - 1):
        if dist[j] <= dist[j - 1] and dist[j] <= dist[j + 1] and dist[j] < 10 * h * (1 + r / model.rho):
            lo, hi = grid[j - 1], grid[j + 1]
            g = (math.sqrt(5) - 1) / 2
            for _ in range(200):
                a1 = hi - g * (hi - lo)
                a2 = lo + g * (hi - lo)
                if at(a1) < at(a2):
                    hi = a2
                else:
                    lo = a1
            t = 0.5 * (lo + hi)
            if at(t) < tol:
                return float(t)
    return math.inf


def random_support_points(map_, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points where the map is not the identity (used for Jacobian sampling)."""
    model = map_.model
    if isinstance(map_, Twist):
        lo, hi = map_.profile.r0, map_.profile.r1
        r = rng.uniform(lo, hi, count)
        if isinstance(model, CylinderTS1):
            q = rng.uniform(0.0, model.length, count)
            sign = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
            return np.stack([q, sign * r], axis=-1)
        m = model.d + 1
        q = rng.normal(size=(count, m))
        q *= model.rho / np.linalg.norm(q, axis=-1, keepdims=True)
        v = rng.normal(size=(count, m))
        v -= np.sum(v * q, -1, keepdims=True) * q / model.rho ** 2
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        return np.concatenate([q, r[:, None] * v], axis=-1)
    if isinstance(map_, RadialBall):
        prof = map_.profile
        r2 = rng.uniform(prof.a, prof.b, count)
        v = rng.normal(size=(count, model.ambient_dim))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        return np.sqrt(r2)[:, None] * v
    if isinstance(map_, FiberShift):
        s = map_.shift
        p = rng.uniform(s.centre - s.half_width, s.centre + s.half_width, count)
        q = rng.uniform(0.0, model.length, count)
        return np.stack([q, p], axis=-1)
    if isinstance(map_, ClassicalHam):
        q = rng.uniform(0.0, model.length, count)
        p = rng.uniform(-1.0, 1.0, count)
        return np.stack([q, p], axis=-1)
    raise DomainError(f"no support sampler for {type(map_).__name__}")


def ambient_norm(map_, point, n: int) -> np.ndarray:
    """Operator norm of ``D phi^n`` for the ambient-induced metric (the volume metric)."""
    n = _check_n(n)
    model = map_.model
    x = model.check_points(point)
    if n == 0:
        return np.ones(x.shape[:-1])
    frame = model.symplectic_frame(x)
    orth, _ = np.linalg.qr(frame)
    amb = map_.ambient_jacobian(x, n)
    return operator_norm(amb @ orth)
