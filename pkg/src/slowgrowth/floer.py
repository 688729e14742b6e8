"""Intersection points of twisted fibers, graded chain ranks and variation pairings.

The twist power ``m`` moves the fiber over ``x`` along geodesics: a covector
of norm ``r`` travels ``tau = m f'(r)`` periods. It meets the fiber over a
point ``y`` at distance ``delta`` from ``x`` once for every ``tau`` in
``{i + delta}`` (direction towards ``y``) and ``{i + 1 - delta}`` (the
opposite direction), ``i = 0..m-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Twist, TwistProfile
from .errors import DomainError, NumericalError, UnsupportedModelError
from .geometry import RoundSphereCotangent, tangent_basis
from .jacobi import CrossModel, intersection_index, sphere

ROOT_TOL = 1e-10
BISECT_ITERS = 60
DEFAULT_DELTA = 0.25


@dataclass(frozen=True)
class IntersectionPoint:
    i: int
    sign: str
    tau: float
    r: float
    index: int
    residual: float


@dataclass(frozen=True)
class IntersectionSet:
    m: int
    delta: float
    points: tuple
    model: str = ""

    def __post_init__(self):
        if len(self.points) != 2 * self.m:
            raise NumericalError(f"expected {2 * self.m} intersection points, got {len(self.points)}")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def indices(self) -> list[int]:
        return [p.index for p in self.points]


def _root(profile: TwistProfile, m: int, tau: float) -> tuple[float, float]:
    lo, hi = profile.r0, profile.r1
    g = lambda r: m * float(profile.d1(r)) - tau
    if not (g(lo) < 0.0 < g(hi)):
        raise NumericalError(f"tau={tau} not bracketed by m f' on ({lo}, {hi})")
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    return r, abs(g(r))


def intersection_points(profile: TwistProfile | None = None, m: int = 1,
                        delta: float = DEFAULT_DELTA, model: CrossModel | None = None
                        ) -> IntersectionSet:
    """The ``2m`` points ``c_i^+-`` ordered by ``tau``, with radii and indices.

    Indices are computed on ``model`` (the round 2-sphere when omitted).
    """
    profile = profile or TwistProfile.floer()
    if profile.kind != "floer":
        raise DomainError("intersection points need the strictly convex Floer profile")
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    model = model or sphere(2)
    pts = []
    for i in range(m):
        for sign, tau in (("+", i + delta), ("-", i + 1 - delta)):
            r, res = _root(profile, m, tau)
            if res > ROOT_TOL:
                raise NumericalError(f"root residual {res:.3g} exceeds {ROOT_TOL}")
            pts.append(IntersectionPoint(i, sign, tau, r,
                                         intersection_index(model, m, i, sign, delta), res))
    radii = [p.r for p in pts]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise NumericalError("intersection radii are not increasing in tau")
    return IntersectionSet(m, delta, tuple(pts), str(model))


# ---------------------------------------------------------------------------
# chain ranks


@dataclass(frozen=True)
class GradedRanks:
    ranks: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(deg < 0 or rank < 0 for deg, rank in self.ranks.items()):
            raise DomainError("degrees and ranks must be nonnegative")

    @property
    def total(self) -> int:
        return sum(self.ranks.values())

    @property
    def degrees(self) -> list[int]:
        return sorted(d for d, r in self.ranks.items() if r > 0)

    def as_dict(self) -> dict:
        return {int(d): int(self.ranks[d]) for d in sorted(self.ranks)}


def cf_ranks(model: CrossModel, m: int, delta: float = DEFAULT_DELTA) -> GradedRanks:
    """Chain ranks per degree, one generator per intersection point graded by its index."""
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    ranks: dict[int, int] = {}
    for i in range(m):
        for sign in ("+", "-"):
            deg = intersection_index(model, m, i, sign, delta)
            ranks[deg] = ranks.get(deg, 0) + 1
    return GradedRanks(dict(sorted(ranks.items())))


def hf_eligible(model: CrossModel) -> bool:
    """Models for which the differential is known to vanish."""
    if model.k != 1 and model.d != 2:
        return True
    if model.name == "CP":
        return True
    # the round 2-sphere is CP^1
    if model.name == "S" and model.d == 2:
        return True
    return model.name == "RP" and model.d == 2


def gap_certificate(ranks: GradedRanks) -> bool:
    """True when no two populated degrees are adjacent, which forces a zero differential."""
    degs = ranks.degrees
    return all(b - a >= 2 for a, b in zip(degs, degs[1:]))


def hf_rank(model: CrossModel, m: int, delta: float = DEFAULT_DELTA) -> GradedRanks:
    if not hf_eligible(model):
        raise UnsupportedModelError(f"vanishing differential is not established for {model}")
    ranks = cf_ranks(model, m, delta)
    if model.k != 1 and model.d != 2 and not gap_certificate(ranks):
        raise NumericalError(f"adjacent populated degrees for {model}: {ranks.degrees}")
    return ranks


# ---------------------------------------------------------------------------
# variation


def variation_pairing(model: CrossModel, m: int, delta: float = DEFAULT_DELTA) -> int:
    """Signed count ``sum_i (-1)^ind(c_i^+) + (-1)^ind(c_i^-)``."""
    if not model.orientable:
        raise UnsupportedModelError(f"{model} is not orientable; signs are undefined")
    if int(m) != m or m < 0:
        raise DomainError("m must be a nonnegative integer")
    total = 0
    for i in range(m):
        for sign in ("+", "-"):
            total += (-1) ** intersection_index(model, m, i, sign, delta)
    return total


def fiber_image_class(model: CrossModel, m: int, n: int) -> tuple[int, int]:
    """Coefficients ``(base, fiber)`` of the image of the fiber class under ``n`` iterates."""
    if not model.orientable or model.k % 2 or model.d % 2 == 0:
        raise UnsupportedModelError(f"{model}: needs an orientable model with k even and d odd")
    if int(n) != n or n < 0:
        raise DomainError("n must be a nonnegative integer")
    return n * variation_pairing(model, m), 1


# ---------------------------------------------------------------------------
# geometric cross-check on the round 2-sphere


@dataclass(frozen=True)
class GeometricCount:
    count: int
    radii: np.ndarray
    directions: np.ndarray
    cell_size: float


def geometric_intersections(m: int, delta: float = DEFAULT_DELTA, radial_cells: int | None = None,
                            angular_cells: int = 64) -> GeometricCount:
    """Count points of ``Twist^m(D_x)`` over ``y`` by pushing a polar mesh of the fiber disc.

    ``D_x`` is the unit fiber disc over the north pole and ``y`` lies at
    distance ``delta`` (in periods) along the first tangent direction. Images
    of mesh vertices are projected gnomonically to the tangent plane at ``y``;
    a cell contributes one point when its image winds once around the origin.
    The angular grid is offset by half a cell so that the two intersecting
    directions run through cell centres.
    """
    model = RoundSphereCotangent(d=2)
    twist = Twist(model, TwistProfile.floer(), m)
    nr = radial_cells or 1500 * m
    rho = model.rho
    x = model.north_pole()
    qx = x[:3]
    e = tangent_basis(qx)[:, 0]
    ang = 2.0 * math.pi * delta
    qy = math.cos(ang) * qx + math.sin(ang) * rho * e
    basis = tangent_basis(qy)

    radii = np.linspace(0.0, 1.0, nr + 1)
    phis = 2.0 * math.pi * (np.arange(angular_cells + 1) + 0.5) / angular_cells
    # fiber covector over the north pole: combination of the tangent directions
    tb = tangent_basis(qx)
    dirs = np.cos(phis)[:, None] * tb[:, 0] + np.sin(phis)[:, None] * tb[:, 1]
    p = radii[:, None, None] * dirs[None, :, :]
    pts = np.concatenate([np.broadcast_to(qx, p.shape), p], axis=-1)
    q_img = twist.apply(pts, 1)[..., :3]
    front = q_img @ qy
    chart = (q_img @ basis) / np.where(front > 0, front, 1.0)[..., None]
    angle = np.arctan2(chart[..., 1], chart[..., 0])
    ok = front > 0

    corners = [(slice(None, -1), slice(None, -1)), (slice(1, None), slice(None, -1)),
               (slice(1, None), slice(1, None)), (slice(None, -1), slice(1, None))]
    turn = np.zeros((nr, angular_cells))
    valid = np.ones((nr, angular_cells), dtype=bool)
    for k in range(4):
        a0, a1 = angle[corners[k]], angle[corners[(k + 1) % 4]]
        turn += np.angle(np.exp(1j * (a1 - a0)))
        valid &= ok[corners[k]]
    winding = np.rint(turn / (2.0 * math.pi)).astype(int) * valid
    hit = np.nonzero(winding)
    r_mid = 0.5 * (radii[hit[0]] + radii[hit[0] + 1])
    phi_mid = 0.5 * (phis[hit[1]] + phis[hit[1] + 1])
    order = np.argsort(r_mid)
    return GeometricCount(int(np.abs(winding).sum()), r_mid[order], phi_mid[order],
                          float(radii[1] - radii[0]))
