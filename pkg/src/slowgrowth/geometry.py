"""Phase-space models, embedded cubes and their volumes.

Points are numpy arrays of ambient coordinates with the coordinate axis last,
so every routine accepts a single point of shape ``(D,)`` or a batch of shape
``(..., D)``.

Coordinates per model:

* ``EuclideanBall``: ``(x1, y1, ..., xN, yN)`` in R^{2N}.
* ``CylinderTS1``: ``(q, p)``. Curves and meshes are carried in the universal
  cover (``q`` is not reduced modulo the circle length), so differences of
  neighbouring samples are plain differences.
* ``RoundSphereCotangent``: ``(q, p)`` in R^{d+1} x R^{d+1} with ``|q| = rho``
  and ``q . p = 0``; ``rho = 1/(2 pi)`` gives every geodesic period 1.

The volume metric is the ambient Euclidean metric multiplied by
``metric_scale**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from .errors import DomainError, NumericalError

POINT_TOL = 1e-9
NUM_TOL = 1e-12
EDGE_LEN_MAX = 0.05
SPHERE_RADIUS = 1.0 / (2.0 * math.pi)
PROBE_STEP = 1e-6
# frame differences see phases moving at rate ~ n |f''|, so the step must stay tiny
FRAME_STEP = 1e-8
_CHUNK = 1 << 17


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class PhaseSpaceModel:
    """Base class; concrete models are the three subclasses below."""

    metric_scale: float = field(default=1.0, kw_only=True)

    kind = "abstract"

    @property
    def ambient_dim(self) -> int:
        raise NotImplementedError

    @property
    def half_dim(self) -> int:
        raise NotImplementedError

    def check_points(self, x) -> np.ndarray:
        """Return ``x`` as a float array, raising DomainError if off the model."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.ambient_dim:
            raise DomainError(
                f"{self.kind}: expected ambient dimension {self.ambient_dim}, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise DomainError(f"{self.kind}: non-finite coordinates")
        return x

    def difference(self, a, b) -> np.ndarray:
        """Ambient displacement from ``a`` to ``b``."""
        return np.asarray(b) - np.asarray(a)

    def lambda_covector(self, x) -> np.ndarray:
        """Coefficients of the Liouville primitive at ``x`` in ambient coordinates."""
        raise NotImplementedError

    def symplectic_frame(self, x) -> np.ndarray:
        """Tangent frame at ``x`` of shape ``(..., D, 2d)``.

        Columns are ``(Q_1..Q_d, P_1..P_d)``: a symplectic basis, orthonormal
        for the horizontal/vertical split metric. Jacobians are expressed in it.
        """
        raise NotImplementedError

    def frame_coordinates(self, x, v) -> np.ndarray:
        """Coordinates of ambient tangent vectors ``v`` (..., D, k) in the frame at ``x``."""
        raise NotImplementedError

    def rescaled(self, scale: float) -> "PhaseSpaceModel":
        if not scale > 0:
            raise DomainError("metric scale must be positive")
        return replace(self, metric_scale=self.metric_scale * scale)

    def metadata(self) -> dict:
        return {"kind": self.kind, "metric": "ambient-induced Euclidean",
                "metric_scale": self.metric_scale}


@dataclass(frozen=True)
class EuclideanBall(PhaseSpaceModel):
    dim: int = 4
    radius: float = 1.0

    kind = "ball"

    def __post_init__(self):
        if self.dim < 2 or self.dim % 2:
            raise DomainError("ball dimension must be even and >= 2")
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    @property
    def half_dim(self) -> int:
        return self.dim // 2

    def lambda_covector(self, x):
        # primitive 1/2 sum(x dy - y dx)
        x = np.asarray(x, dtype=np.float64)
        out = np.empty_like(x)
        out[..., 0::2] = -0.5 * x[..., 1::2]
        out[..., 1::2] = 0.5 * x[..., 0::2]
        return out

    def _perm(self):
        n = self.half_dim
        order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
        return np.eye(2 * n)[:, order]

    def symplectic_frame(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.broadcast_to(self._perm(), x.shape[:-1] + (self.dim, self.dim))

    def frame_coordinates(self, x, v):
        return np.swapaxes(self._perm(), 0, 1) @ np.asarray(v)

    def metadata(self):
        meta = super().metadata()
        meta.update(dim=self.dim, radius=self.radius, primitive="1/2 sum(x dy - y dx)")
        return meta


@dataclass(frozen=True)
class CylinderTS1(PhaseSpaceModel):
    length: float = 1.0

    kind = "cylinder"

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("circle length must be positive")

    @property
    def ambient_dim(self) -> int:
        return 2

    @property
    def half_dim(self) -> int:
        return 1

    def wrap(self, x) -> np.ndarray:
        x = np.array(x, dtype=np.float64, copy=True)
        x[..., 0] = np.mod(x[..., 0], self.length)
        return x

    def same_point(self, a, b, tol: float = POINT_TOL) -> np.ndarray:
        d = np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64)
        dq = d[..., 0] - self.length * np.round(d[..., 0] / self.length)
        return np.hypot(dq, d[..., 1]) <= tol

    def lambda_covector(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        out[..., 0] = x[..., 1]
        return out

    def symplectic_frame(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2))

    def frame_coordinates(self, x, v):
        return np.asarray(v)

    def metadata(self):
        meta = super().metadata()
        meta.update(length=self.length, primitive="p dq")
        return meta


def tangent_basis(q: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``q``.

    Householder reflection sending ``q/|q|`` to a multiple of the first axis;
    returns an array of shape ``(..., m, m-1)`` whose columns span ``q``-perp.
    """
    q = np.asarray(q, dtype=np.float64)
    m = q.shape[-1]
    u = q / np.linalg.norm(q, axis=-1, keepdims=True)
    sign = np.where(u[..., 0] >= 0.0, 1.0, -1.0)
    w = u.copy()
    w[..., 0] += sign
    ww = np.sum(w * w, axis=-1)[..., None, None]
    house = np.eye(m) - 2.0 * w[..., :, None] * w[..., None, :] / ww
    return house[..., :, 1:]


@dataclass(frozen=True)
class RoundSphereCotangent(PhaseSpaceModel):
    d: int = 2

    kind = "sphere"

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("sphere dimension must be >= 1")

    @property
    def rho(self) -> float:
        return SPHERE_RADIUS

    @property
    def ambient_dim(self) -> int:
        return 2 * (self.d + 1)

    @property
    def half_dim(self) -> int:
        return self.d

    def split(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x[..., : self.d + 1], x[..., self.d + 1:]

    def check_points(self, x):
        x = super().check_points(x)
        q, p = self.split(x)
        radial = np.abs(np.linalg.norm(q, axis=-1) - self.rho)
        normal = np.abs(np.sum(q * p, axis=-1))
        if np.any(radial > POINT_TOL) or np.any(normal > POINT_TOL):
            raise DomainError(
                "sphere cotangent: point off the model (| |q| - rho | = "
                f"{float(np.max(radial)):.3e}, |q.p| = {float(np.max(normal)):.3e})")
        return x

    def north_pole(self) -> np.ndarray:
        x = np.zeros(self.ambient_dim)
        x[self.d] = self.rho
        return x

    def lambda_covector(self, x):
        q, p = self.split(x)
        return np.concatenate([p, np.zeros_like(q)], axis=-1)

    def symplectic_frame(self, x):
        q, p = self.split(x)
        e = tangent_basis(q)                                  # (..., d+1, d)
        pe = np.einsum("...i,...ij->...j", p, e)              # p . e_j
        horiz_q = e
        horiz_p = -q[..., :, None] * pe[..., None, :] / self.rho ** 2
        top = np.concatenate([horiz_q, np.zeros_like(e)], axis=-1)
        bottom = np.concatenate([horiz_p, e], axis=-1)
        return np.concatenate([top, bottom], axis=-2)

    def frame_coordinates(self, x, v):
        q, _ = self.split(x)
        e = tangent_basis(q)
        v = np.asarray(v)
        m = self.d + 1
        hq = np.swapaxes(e, -1, -2) @ v[..., :m, :]
        vp = np.swapaxes(e, -1, -2) @ v[..., m:, :]
        return np.concatenate([hq, vp], axis=-2)

    def metadata(self):
        meta = super().metadata()
        meta.update(d=self.d, rho=self.rho, primitive="p . dq")
        return meta


# ---------------------------------------------------------------------------
# cubes


def _grid(axes: Sequence[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


@dataclass(frozen=True, eq=False)
class MeshCube:
    """An embedded i-cube carried as a tensor grid plus its embedding.

    ``axes`` are strictly increasing parameter coordinates (one array per
    axis; the parameter box is their hull). ``embedding`` maps parameters of
    shape ``(..., i)`` to ambient points ``(..., D)``; cubes built from raw
    vertex arrays have no embedding.
    """

    model: PhaseSpaceModel
    axes: tuple
    embedding: Callable[[np.ndarray], np.ndarray] | None
    source: str
    level: int = 0
    explicit_vertices: np.ndarray | None = None

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=np.float64) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        if not 1 <= len(axes) <= 2 * self.model.half_dim:
            raise DomainError(f"cube dimension {len(axes)} outside 1..{2 * self.model.half_dim}")
        for a in axes:
            if a.ndim != 1 or a.size < 2 or np.any(np.diff(a) <= 0):
                raise DomainError("each axis needs >= 2 strictly increasing coordinates")
        if self.embedding is None and self.explicit_vertices is None:
            raise DomainError("cube needs an embedding or explicit vertices")
        if self.explicit_vertices is not None:
            shape = tuple(a.size for a in axes) + (self.model.ambient_dim,)
            if self.explicit_vertices.shape != shape:
                raise DomainError(f"vertex array shape {self.explicit_vertices.shape} != {shape}")

    @classmethod
    def from_embedding(cls, model, embedding, box, resolution, source, validate=True):
        box = [tuple(map(float, b)) for b in box]
        if isinstance(resolution, (int, np.integer)):
            resolution = [int(resolution)] * len(box)
        if any(r < 2 for r in resolution):
            raise DomainError("resolution must be >= 2 per axis")
        axes = tuple(np.linspace(lo, hi, r) for (lo, hi), r in zip(box, resolution))
        cube = cls(model, axes, embedding, source)
        if validate:
            model.check_points(cube.vertices)
        return cube

    @classmethod
    def from_vertices(cls, model, axes, vertices, source):
        vertices = model.check_points(vertices)
        return cls(model, tuple(axes), None, source, explicit_vertices=vertices)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def box(self) -> list:
        return [(float(a[0]), float(a[-1])) for a in self.axes]

    def evaluate(self, params) -> np.ndarray:
        if self.embedding is None:
            raise DomainError("cube has no embedding to evaluate")
        return np.asarray(self.embedding(np.asarray(params, dtype=np.float64)), dtype=np.float64)

    @cached_property
    def vertices(self) -> np.ndarray:
        if self.explicit_vertices is not None:
            return self.explicit_vertices
        return self.evaluate(_grid(self.axes))

    def refined(self, which: Sequence[int] | None = None) -> "MeshCube":
        """Bisect every interval along the chosen axes (default: all)."""
        if self.embedding is None:
            raise DomainError("cannot refine a cube without an embedding")
        which = range(self.dim) if which is None else which
        axes = list(self.axes)
        for k in which:
            axes[k] = bisect_axis(axes[k])
        return replace(self, axes=tuple(axes), level=self.level + 1, explicit_vertices=None)

    def with_axes(self, axes, level: int | None = None) -> "MeshCube":
        return replace(self, axes=tuple(axes), explicit_vertices=None,
                       level=self.level if level is None else level)

    def composed(self, fn: Callable[[np.ndarray], np.ndarray], source: str,
                 model: PhaseSpaceModel | None = None) -> "MeshCube":
        """Cube with embedding ``fn o embedding`` on the same parameter grid."""
        inner = self.embedding
        if inner is None:
            raise DomainError("cannot compose a cube without an embedding")
        return replace(self, embedding=lambda t: fn(inner(t)), source=source,
                       explicit_vertices=None, model=model or self.model)


def bisect_axis(a: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Insert interval midpoints (only where ``mask`` is true, if given)."""
    mids = 0.5 * (a[:-1] + a[1:])
    if mask is not None:
        mids = mids[mask]
    return np.sort(np.concatenate([a, mids]))


def _coarse_indices(n: int) -> np.ndarray:
    idx = np.arange(0, n, 2)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


# ---------------------------------------------------------------------------
# volume


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    resolution: tuple
    richardson_error: float
    axis_errors: tuple = ()
    frame: str = "vertex"
    cells: int = 0

    def __post_init__(self):
        if self.value < 0 or self.richardson_error < 0:
            raise NumericalError("volume and its error must be nonnegative")


def _sqrt_gram(frames: np.ndarray, offset: int = 0) -> np.ndarray:
    flat = frames.reshape(-1, frames.shape[-2], frames.shape[-1])
    dets = kernels.gram_det(np.ascontiguousarray(flat))
    bad = np.flatnonzero(dets < -NUM_TOL)
    if bad.size:
        cell = int(bad[0]) + offset
        raise NumericalError(f"degenerate cell {cell}: Gram determinant {dets[bad[0]]:.3e}", cell)
    return np.sqrt(np.maximum(dets, 0.0))


def _vertex_volume(model: PhaseSpaceModel, verts: np.ndarray) -> float:
    """Sum of sqrt(det Gram) over cells with edge-averaged chord frames."""
    i = verts.ndim - 1
    frames = []
    for a in range(i):
        lo = [slice(None)] * i
        hi = [slice(None)] * i
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        dv = model.difference(verts[tuple(lo)], verts[tuple(hi)])
        for b in range(i):
            if b == a:
                continue
            s0 = [slice(None)] * i
            s1 = [slice(None)] * i
            s0[b] = slice(0, -1)
            s1[b] = slice(1, None)
            dv = 0.5 * (dv[tuple(s0)] + dv[tuple(s1)])
        frames.append(dv)
    frames = np.stack(frames, axis=-2)
    return float(np.sum(_sqrt_gram(frames)))


def _probe_volume(model: PhaseSpaceModel, cube: MeshCube, axes: Sequence[np.ndarray]) -> float:
    """Midpoint quadrature of the pulled-back volume density.

    Frames are central differences of the embedding at cell centres, scaled by
    the cell widths; cells are visited in lexicographic order in fixed chunks.
    """
    centres = [0.5 * (a[:-1] + a[1:]) for a in axes]
    widths = [np.diff(a) for a in axes]
    shape = tuple(c.size for c in centres)
    total = int(np.prod(shape))
    i = len(axes)
    eta = [FRAME_STEP * max(1.0, abs(a[-1] - a[0])) for a in axes]
    acc = 0.0
    for start in range(0, total, _CHUNK):
        idx = np.unravel_index(np.arange(start, min(total, start + _CHUNK)), shape)
        t = np.stack([centres[k][idx[k]] for k in range(i)], axis=-1)
        frames = []
        for k in range(i):
            step = np.zeros(i)
            step[k] = eta[k]
            tp, tm = t + step, t - step
            plus = cube.evaluate(tp)
            minus = cube.evaluate(tm)
            # divide by the representable step, not 2 eta
            span = tp[:, k] - tm[:, k]
            dv = model.difference(minus, plus) * (widths[k][idx[k]] / span)[:, None]
            frames.append(dv)
        acc += float(np.sum(_sqrt_gram(np.stack(frames, axis=-2), start)))
    return acc


def _coarsen(axes: Sequence[np.ndarray], k: int) -> list:
    out = list(axes)
    out[k] = axes[k][_coarse_indices(axes[k].size)]
    return out


def mesh_volume(model: PhaseSpaceModel, cube: MeshCube, frame: str = "auto") -> VolumeEstimate:
    """i-dimensional volume of an embedded cube.

    ``frame="vertex"`` uses chord frames from the vertex grid (works without an
    embedding); ``frame="probe"`` uses central-difference frames of the
    embedding at cell centres. ``"auto"`` picks probe for dimension >= 2 when an
    embedding is present. The error estimate sums, over axes, the change from
    dropping every second grid line along that axis.
    """
    if frame == "auto":
        frame = "probe" if (cube.embedding is not None and cube.dim >= 2) else "vertex"
    if any(a.size < 2 for a in cube.axes):
        raise DomainError("cube needs >= 2 vertices per axis")
    scale = model.metric_scale ** cube.dim
    axis_errors = []
    if frame == "vertex":
        verts = cube.vertices
        value = _vertex_volume(model, verts)
        for k, a in enumerate(cube.axes):
            idx = _coarse_indices(a.size)
            coarse = np.take(verts, idx, axis=k)
            axis_errors.append(abs(value - _vertex_volume(model, coarse)))
    elif frame == "probe":
        if cube.embedding is None:
            raise DomainError("probe frames need an embedding")
        value = _probe_volume(model, cube, cube.axes)
        for k in range(cube.dim):
            if cube.axes[k].size < 3:
                axis_errors.append(0.0)
                continue
            axis_errors.append(abs(value - _probe_volume(model, cube, _coarsen(cube.axes, k))))
    else:
        raise DomainError(f"unknown frame mode {frame!r}")
    resolution = tuple(float(np.max(np.diff(a))) for a in cube.axes)
    cells = int(np.prod([a.size - 1 for a in cube.axes]))
    return VolumeEstimate(value=value * scale, resolution=resolution,
                          richardson_error=float(sum(axis_errors)) * scale,
                          axis_errors=tuple(e * scale for e in axis_errors),
                          frame=frame, cells=cells)


# ---------------------------------------------------------------------------
# constructors


def _unit_vectors(angles: np.ndarray, d: int) -> np.ndarray:
    """Hyperspherical unit vectors in R^d from d-1 angles (last one azimuthal)."""
    shape = angles.shape[:-1]
    out = np.ones(shape + (d,))
    sin_prod = np.ones(shape)
    for j in range(d - 1):
        out[..., j] = sin_prod * np.cos(angles[..., j])
        sin_prod = sin_prod * np.sin(angles[..., j])
    out[..., d - 1] = sin_prod
    return out


def fiber_disc(model: PhaseSpaceModel, base_point, radius: float, resolution: int) -> MeshCube:
    """The momentum disc ``{|p| <= radius}`` over ``base_point``.

    For the cylinder this is the segment ``{q} x [-radius, radius]``. For the
    sphere model with ``d >= 2`` the parameters are polar/hyperspherical:
    ``(r, theta_1, ..., theta_{d-1})`` with the last angle in ``[0, 2 pi]``.
    """
    if not radius > 0:
        raise DomainError("radius must be positive")
    if resolution < 2:
        raise DomainError("resolution must be >= 2")
    if isinstance(model, CylinderTS1):
        q0 = float(np.asarray(base_point, dtype=np.float64).reshape(-1)[0])

        def seg(t):
            t = t[..., 0]
            return np.stack([np.full_like(t, q0), t], axis=-1)

        return MeshCube.from_embedding(model, seg, [(-radius, radius)], resolution,
                                       f"fiber segment over q={q0!r}, radius {radius!r}")
    if isinstance(model, RoundSphereCotangent):
        x = np.asarray(base_point, dtype=np.float64).reshape(-1)
        m = model.d + 1
        if x.size == 2 * m:
            if np.any(np.abs(x[m:]) > POINT_TOL):
                raise DomainError("base point must lie on the zero section")
            x = x[:m]
        if x.size != m:
            raise DomainError(f"base point needs {m} coordinates")
        if abs(np.linalg.norm(x) - model.rho) > POINT_TOL:
            raise DomainError("base point off the sphere of radius rho")
        basis = tangent_basis(x)
        d = model.d
        if d == 1:
            def emb(t):
                p = t[..., :1] * basis[:, 0]
                return np.concatenate([np.broadcast_to(x, p.shape), p], axis=-1)
            box = [(-radius, radius)]
        else:
            def emb(t):
                u = _unit_vectors(t[..., 1:], d)
                p = t[..., :1] * (u @ basis.T)
                return np.concatenate([np.broadcast_to(x, p.shape), p], axis=-1)
            box = [(0.0, radius)] + [(0.0, math.pi)] * (d - 2) + [(0.0, 2.0 * math.pi)]
        return MeshCube.from_embedding(model, emb, box, resolution,
                                       f"fiber disc over q={x.tolist()!r}, radius {radius!r}")
    raise DomainError(f"fiber discs need a cotangent model, not {model.kind}")


def coordinate_cube(model: PhaseSpaceModel, slots: Sequence[int], box, resolution,
                    source: str | None = None) -> MeshCube:
    """Cube embedded by writing parameter ``k`` into ambient coordinate ``slots[k]``."""
    slots = list(slots)
    dim = model.ambient_dim

    def emb(t):
        out = np.zeros(t.shape[:-1] + (dim,))
        for k, s in enumerate(slots):
            out[..., s] = t[..., k]
        return out

    return MeshCube.from_embedding(model, emb, box, resolution,
                                   source or f"coordinate cube in slots {slots}")


def great_circle_arc(model: RoundSphereCotangent, turns: float, resolution: int) -> MeshCube:
    """Zero-section arc ``t -> rho (cos 2 pi t, sin 2 pi t, 0, ...)``, ``t in [0, turns]``."""
    rho = model.rho
    m = model.d + 1

    def emb(t):
        t = t[..., 0]
        out = np.zeros(t.shape + (2 * m,))
        out[..., 0] = rho * np.cos(2 * math.pi * t)
        out[..., 1] = rho * np.sin(2 * math.pi * t)
        return out

    return MeshCube.from_embedding(model, emb, [(0.0, turns)], resolution,
                                   f"great-circle arc, parameter length {turns!r}")


def witness_slots(i: int) -> list[int]:
    """Ambient slots of the ball witnesses: odd ``i`` skips ``y1``; even ``i`` skips ``y1, y2``."""
    if i == 1:
        return [0]
    if i % 2:
        return [0] + list(range(2, i + 1))
    if i == 2:
        return [0, 2]
    return [0, 2] + list(range(4, i + 2))


def ball_witness(model: EuclideanBall, i: int, resolution: int = 9) -> MeshCube:
    """Coordinate cube on ``[0, 1/(i+1)]^i`` whose rotation images grow linearly."""
    if not 1 <= i <= model.dim - 1:
        raise DomainError(f"witness dimension must lie in 1..{model.dim - 1}")
    side = 1.0 / (i + 1)
    return coordinate_cube(model, witness_slots(i), [(0.0, side)] * i, resolution,
                           f"ball witness sigma_{i} on [0, 1/{i + 1}]^{i}")
