"""Liouville-form line integrals, actions of periodic orbits, loop series and flux."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._pykernels import dd_lerp
from .dynamics import ClassicalHam, PeriodicOrbit, apply
from .errors import DomainError
from .geometry import EDGE_LEN_MAX, NUM_TOL, POINT_TOL, CylinderTS1, PhaseSpaceModel


@dataclass
class SampledCurve:
    """Ordered samples of a curve in ambient coordinates.

    On the cylinder samples are lifted, so a loop that winds around the circle
    ends at ``q + k L``. ``source`` optionally maps parameters to points and
    lets callers refine the curve; without it the samples are all there is.
    """

    model: PhaseSpaceModel
    points: np.ndarray
    params: np.ndarray
    closed: bool = False
    source: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = self.model.check_points(self.points)
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 2:
            raise DomainError("a sampled curve needs at least two points")
        if self.params.shape != (self.points.shape[0],):
            raise DomainError("one parameter value per sample is required")
        if np.any(np.diff(self.params) <= 0):
            raise DomainError("curve parameters must increase strictly")
        if self.closed and not _endpoints_match(self.model, self.points):
            raise DomainError("closed curve endpoints differ by more than point tolerance")

    @classmethod
    def from_function(cls, model, fn, t0: float = 0.0, t1: float = 1.0, closed: bool = False,
                      edge_len_max: float = EDGE_LEN_MAX, initial: int = 65,
                      max_points: int = 2_000_000) -> "SampledCurve":
        """Sample ``fn`` on ``[t0, t1]``, bisecting until every chord is at most ``edge_len_max``."""
        params = np.linspace(t0, t1, initial)
        params, points = _refine_samples(model, fn, params, fn(params[:, None]), edge_len_max,
                                         max_points)
        return cls(model, points, params, closed, fn)

    @classmethod
    def segment(cls, model, start, end, edge_len_max: float = EDGE_LEN_MAX) -> "SampledCurve":
        """Straight segment in the model chart from ``start`` to ``end``."""
        a = model.check_points(start)
        b = model.check_points(end)
        return cls.from_function(model, lambda t: a + t * (b - a), edge_len_max=edge_len_max,
                                 initial=2)

    @property
    def spacing(self) -> float:
        steps = np.linalg.norm(self.model.difference(self.points[:-1], self.points[1:]), axis=-1)
        return float(steps.max())

    def mapped(self, fn, edge_len_max: float = EDGE_LEN_MAX,
               max_points: int = 2_000_000) -> "SampledCurve":
        """Image under ``fn``, refined through ``source`` when the image is too coarse."""
        pts = fn(self.points)
        params = self.params
        if self.source is not None:
            comp = lambda t: fn(self.source(t))
            params, pts = _refine_samples(self.model, comp, params, pts, edge_len_max, max_points)
            return SampledCurve(self.model, pts, params, self.closed, comp)
        return SampledCurve(self.model, pts, params, self.closed)

    def reversed(self) -> "SampledCurve":
        src = None
        if self.source is not None:
            lo, hi, inner = self.params[0], self.params[-1], self.source
            src = lambda t: inner(lo + hi - t)
        return SampledCurve(self.model, self.points[::-1].copy(),
                            self.params[0] + self.params[-1] - self.params[::-1], self.closed, src)


def _endpoints_match(model, points) -> bool:
    if isinstance(model, CylinderTS1):
        return bool(model.same_point(points[0], points[-1]))
    return bool(np.linalg.norm(points[-1] - points[0]) <= POINT_TOL)


def _refine_samples(model, fn, params, points, edge_len_max, max_points):
    while True:
        chord = np.linalg.norm(model.difference(points[:-1], points[1:]), axis=-1)
        mark = chord > edge_len_max
        if not mark.any():
            return params, points
        if params.size + int(mark.sum()) > max_points:
            raise DomainError(f"curve refinement exceeds {max_points} samples")
        mids = 0.5 * (params[:-1] + params[1:])[mark]
        new = fn(mids[:, None])
        params = np.concatenate([params, mids])
        points = np.concatenate([points, new])
        order = np.argsort(params, kind="stable")
        params, points = params[order], points[order]


def lambda_integral(model, curve: SampledCurve, edge_len_max: float = EDGE_LEN_MAX) -> float:
    """Trapezoidal integral of the Liouville primitive along the samples."""
    if curve.model != model:
        raise DomainError("curve lives on a different model")
    if curve.spacing > edge_len_max + NUM_TOL:
        raise DomainError(f"curve spacing {curve.spacing:.3g} exceeds {edge_len_max}")
    pts = curve.points
    lam = model.lambda_covector(pts)
    step = model.difference(pts[:-1], pts[1:])
    return float(np.sum(0.5 * (lam[:-1] + lam[1:]) * step))


def curve_length(curve: SampledCurve) -> float:
    """Polygonal length in the model's volume metric."""
    steps = curve.model.difference(curve.points[:-1], curve.points[1:])
    return float(np.linalg.norm(steps, axis=-1).sum() * curve.model.metric_scale)


@dataclass(frozen=True)
class ActionValue:
    value: float
    loop_integral: float
    hamiltonian_integral: float
    orbit: object = field(repr=False, default=None)

    @property
    def decomposition(self) -> tuple[float, float]:
        return self.loop_integral, self.hamiltonian_integral


def orbit_action(ham: ClassicalHam, orbit) -> ActionValue:
    """``A_H(x) = int x^* lambda - int_0^1 H(t, x(t)) dt``, both by composite trapezoid.

    ``orbit`` is a PeriodicOrbit or a closed SampledCurve whose parameter is time.
    """
    if isinstance(orbit, PeriodicOrbit):
        curve = SampledCurve(ham.model, orbit.points, orbit.times, closed=True)
    else:
        curve = orbit
    if not curve.closed or not _endpoints_match(curve.model, curve.points):
        raise DomainError("orbit is not closed")
    t = curve.params
    if abs((t[-1] - t[0]) - 1.0) > NUM_TOL:
        raise DomainError("orbit must be parametrized over one unit period")
    loop = lambda_integral(ham.model, curve, edge_len_max=math.inf)
    h = ham.hamiltonian(t, curve.points)
    hint = float(np.sum(0.5 * (h[:-1] + h[1:]) * np.diff(t)))
    return ActionValue(loop - hint, loop, hint, orbit)


def shifted_orbit(orbit: PeriodicOrbit, shift: int) -> SampledCurve:
    """The same loop started ``shift`` samples later, re-timed from zero (for invariance checks)."""
    pts = orbit.points[:-1]
    k = shift % pts.shape[0]
    turn = orbit.points[-1] - orbit.points[0]
    rolled = np.concatenate([pts[k:], pts[:k] + turn, pts[k:k + 1] + turn])
    dt = np.diff(orbit.times)
    times = np.concatenate([[0.0], np.cumsum(np.roll(dt, -k))])
    return SampledCurve(CylinderTS1(), rolled, times, closed=True)


def flux_pairing(map_, cycle: SampledCurve, n: int, edge_len_max: float = EDGE_LEN_MAX) -> float:
    """``int_cycle (phi^n)^* lambda - lambda`` as a difference of two line integrals."""
    image = cycle.mapped(lambda x: apply(map_, x, n, wrap=False), edge_len_max)
    model = map_.model
    return lambda_integral(model, image, edge_len_max) - lambda_integral(model, cycle, edge_len_max)


# ---------------------------------------------------------------------------
# loop series for a pair of periodic orbits


@dataclass(frozen=True)
class LoopRow:
    n: int
    integral: float
    expected: float
    length: float
    samples: int


@dataclass
class LoopSeries:
    """``n -> int_{l_n} lambda`` with ``l_n = phi^n(sigma) u -sigma`` and ``length(l_n)``."""

    gap: float
    rows: list
    endpoint_radius: float
    sublevel_radius: float | None
    metadata: dict = field(default_factory=dict)

    def relative_errors(self) -> np.ndarray:
        return np.array([abs(r.integral - r.expected) / abs(r.expected) for r in self.rows])


def equilibrium_gap(ham: ClassicalHam, low_q: float, high_q: float) -> float:
    """Action gap ``A(y) - A(x)`` between equilibria ``y = (low_q, 0)`` and ``x = (high_q, 0)``.

    On a constant loop ``A = -int H dt = -V(q)`` because the time weight averages to one.
    """
    pot = ham.potential
    return float(pot.static(high_q) - pot.static(low_q))


def sublevel_radius(ham: ClassicalHam, sigma: SampledCurve) -> float:
    """Fiber radius of the invariant sublevel set ``{H <= max_sigma H}`` (autonomous ``H`` only)."""
    if not ham.potential.autonomous:
        raise DomainError("the sublevel bound needs a time-independent Hamiltonian")
    level = float(np.max(ham.hamiltonian(0.0, sigma.points)))
    vmin, _ = ham.potential.static_range()
    return math.sqrt(max(0.0, 2.0 * (level - vmin)))


def loop_series(ham: ClassicalHam, start, end, ns: Sequence[int], gap: float,
                edge_len_max: float = EDGE_LEN_MAX, max_points: int = 2_000_000) -> LoopSeries:
    """Integrals and lengths of ``l_n`` for a connecting segment from ``start`` to ``end``.

    ``start`` and ``end`` are fixed points of the period map, so ``phi^n(sigma)``
    joins them and ``l_n`` closes up. Images are advanced one period at a time
    and re-sampled after every period: an interval whose chord exceeds
    ``edge_len_max`` gets a midpoint, flowed from time zero.

    Near a hyperbolic endpoint the image stretches like ``e^(lambda t)``, so
    after a few dozen periods the relevant parameters sit below double
    resolution. Orbits are therefore carried in double-double arithmetic.
    """
    ns = sorted(int(n) for n in ns)
    if not ns or ns[0] < 1:
        raise DomainError("iterates must be >= 1")
    model = ham.model
    a = model.check_points(start)
    b = model.check_points(end)
    period = ham.steps_per_period
    params = SampledCurve.segment(model, a, b, edge_len_max).params
    hi, lo = dd_lerp(a, b, params)
    wanted = set(ns)
    rows = []
    for k in range(1, ns[-1] + 1):
        hi, lo = ham.flow_precise(hi, lo, period)
        while True:
            chord = np.linalg.norm(model.difference(hi[:-1], hi[1:]), axis=-1)
            mark = chord > edge_len_max
            if not mark.any():
                break
            if params.size + int(mark.sum()) > max_points:
                raise DomainError(f"loop refinement exceeds {max_points} samples")
            mids = 0.5 * (params[:-1] + params[1:])[mark]
            if np.any(mids <= params[:-1][mark]) or np.any(mids >= params[1:][mark]):
                raise DomainError(f"parameter resolution exhausted at iterate {k}")
            mh, ml = ham.flow_precise(*dd_lerp(a, b, mids), k * period)
            params = np.concatenate([params, mids])
            order = np.argsort(params, kind="stable")
            params = params[order]
            hi = np.concatenate([hi, mh])[order]
            lo = np.concatenate([lo, ml])[order]
        if k in wanted:
            base = SampledCurve(model, a + params[:, None] * (b - a), params)
            img = SampledCurve(model, hi, params)
            val = lambda_integral(model, img, math.inf) - lambda_integral(model, base, math.inf)
            rows.append(LoopRow(k, val, k * gap, curve_length(img) + curve_length(base),
                                params.size))
    p_end = max(abs(float(a[1])), abs(float(b[1])))
    sigma = SampledCurve.segment(model, a, b, edge_len_max)
    radius = sublevel_radius(ham, sigma) if ham.potential.autonomous else None
    meta = {"start": a.tolist(), "end": b.tolist(), "edge_len_max": edge_len_max,
            "primitive": "p dq", "sigma": "straight segment in the (q, p) chart",
            "arithmetic": "double-double orbits"}
    return LoopSeries(gap, rows, p_end, radius, meta)
