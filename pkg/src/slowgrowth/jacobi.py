"""Conjugate points and geodesic indices on compact rank-one symmetric spaces.

Every model carries the curvature spectrum of the Jacobi operator along a
unit-speed geodesic, scaled so that all geodesics close up at time 1. A scalar
Jacobi field ``J'' + kappa J = 0`` with ``J(0) = 0`` vanishes at
``j pi / sqrt(kappa)``. Only two eigenvalues occur: ``4 pi^2`` (zeros at half
periods) and ``pi^2`` (zeros at whole periods).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._backend import kernels
from .errors import DegenerateTimeError, DomainError

CONJ_TOL = 1e-9
ODE_STEP = 1e-5

FAST = 4.0 * math.pi ** 2
SLOW = math.pi ** 2


@dataclass(frozen=True)
class CrossModel:
    name: str
    d: int
    spectrum: tuple          # ((kappa, multiplicity), ...)
    orientable: bool = True
    label: str = ""

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("dimension must be >= 1")
        if sum(mult for _, mult in self.spectrum) != self.d - 1:
            raise DomainError("spectrum multiplicities must sum to d - 1")
        for kappa, mult in self.spectrum:
            if mult < 1:
                raise DomainError("multiplicities must be positive")
            # period-1 closure: every scalar field vanishes at t = 1
            ratio = math.sqrt(kappa) / math.pi
            if abs(ratio - round(ratio)) > 1e-12 or round(ratio) < 1:
                raise DomainError(f"kappa={kappa} does not close up at time 1")

    def __str__(self):
        return self.label or f"{self.name}({self.d})"

    @property
    def k(self) -> int:
        """Index of a closed geodesic: conjugate points in the open interval (0, 1)."""
        return _index_open(self.spectrum, Fraction(1))

    @property
    def period_index(self) -> int:
        """Index gained over one full period: ``k + d - 1``."""
        return sum(_lattice(kappa) * mult for kappa, mult in self.spectrum)

    @property
    def dimension_parity(self) -> int:
        return self.d % 2

    def metadata(self) -> dict:
        return {"name": self.name, "label": str(self), "d": self.d, "k": self.k,
                "orientable": self.orientable,
                "spectrum": [[kappa, mult] for kappa, mult in self.spectrum],
                "spectrum_status": "derived, validated by the index table"}


def _lattice(kappa: float) -> int:
    """Zeros per unit time, ``sqrt(kappa)/pi``."""
    return int(round(math.sqrt(kappa) / math.pi))


def _index_open(spectrum, t: Fraction) -> int:
    """Conjugate points in ``(0, t)`` counted with multiplicity (exact arithmetic)."""
    total = 0
    for kappa, mult in spectrum:
        per = _lattice(kappa)
        # zeros at j / per for j >= 1; count j with j / per < t
        z = t * per
        count = math.ceil(z) - 1 if z.denominator == 1 else math.floor(z)
        total += mult * max(0, count)
    return total


def sphere(d: int) -> CrossModel:
    spectrum = ((FAST, d - 1),) if d > 1 else ()
    return CrossModel("S", d, spectrum, True, f"S({d})")


def real_projective(d: int) -> CrossModel:
    if d < 2:
        raise DomainError("RP(d) needs d >= 2")
    return CrossModel("RP", d, ((SLOW, d - 1),), d % 2 == 1, f"RP({d})")


def complex_projective(n: int) -> CrossModel:
    if n < 1:
        raise DomainError("CP(n) needs n >= 1")
    spectrum = ((FAST, 1),) + (((SLOW, 2 * n - 2),) if n > 1 else ())
    return CrossModel("CP", 2 * n, spectrum, True, f"CP({n})")


def quaternionic_projective(n: int) -> CrossModel:
    if n < 1:
        raise DomainError("HP(n) needs n >= 1")
    spectrum = ((FAST, 3),) + (((SLOW, 4 * n - 4),) if n > 1 else ())
    return CrossModel("HP", 4 * n, spectrum, True, f"HP({n})")


def cayley_plane() -> CrossModel:
    return CrossModel("CaP2", 16, ((FAST, 7), (SLOW, 8)), True, "CaP2")


def sphere_quotient(d: int, contains_minus_id: bool) -> CrossModel:
    """Quotient of the odd sphere ``S^d`` by a free isometric group action.

    Containing ``-id`` identifies antipodes, which halves the period and moves
    every conjugate point to whole periods.
    """
    if d < 3 or d % 2 == 0:
        raise DomainError("sphere quotients need odd d >= 3")
    kappa = SLOW if contains_minus_id else FAST
    tag = "with -id" if contains_minus_id else "without -id"
    return CrossModel("SphereQuotient", d, ((kappa, d - 1),), True,
                      f"SphereQuotient({d}, {tag})")


def cp_quotient(odd: int) -> CrossModel:
    """``CP^{2n-1}`` modulo the free antiholomorphic involution; real dimension ``4n - 2``."""
    if odd < 1 or odd % 2 == 0:
        raise DomainError("CPquot needs an odd complex dimension")
    n = (odd + 1) // 2
    d = 4 * n - 2
    spectrum = ((FAST, 1),) + (((SLOW, 4 * n - 4),) if n > 1 else ())
    return CrossModel("CPquot", d, spectrum, False, f"CPquot({odd})")


_FACTORIES = {
    "S": sphere, "RP": real_projective, "CP": complex_projective,
    "HP": quaternionic_projective,
}


def model_from_name(name: str, param: int | None = None,
                    contains_minus_id: bool | None = None) -> CrossModel:
    """Build a model from a family name as used in config files."""
    if name == "CaP2":
        return cayley_plane()
    if param is None:
        raise DomainError(f"model {name} needs a dimension parameter")
    if name in _FACTORIES:
        return _FACTORIES[name](int(param))
    if name == "SphereQuotient":
        if contains_minus_id is None:
            raise DomainError("SphereQuotient needs contains_minus_id")
        return sphere_quotient(int(param), bool(contains_minus_id))
    if name == "CPquot":
        return cp_quotient(int(param))
    raise DomainError(f"unknown model family {name!r}")


def standard_models(max_dim: int = 7) -> list[CrossModel]:
    """A representative list of every family, used by sweeps and tests."""
    out = [sphere(d) for d in range(1, max_dim + 1)]
    out += [real_projective(d) for d in range(2, max_dim + 1)]
    out += [complex_projective(n) for n in range(1, 4)]
    out += [quaternionic_projective(n) for n in range(1, 3)]
    out.append(cayley_plane())
    for d in (3, 5, 7):
        out += [sphere_quotient(d, True), sphere_quotient(d, False)]
    out += [cp_quotient(1), cp_quotient(3)]
    return out


# ---------------------------------------------------------------------------
# conjugate points


@dataclass(frozen=True)
class ConjugateProfile:
    times: np.ndarray
    multiplicities: np.ndarray
    horizon: float
    ode_deviation: float | None = None

    def index_before(self, t: float) -> int:
        return int(self.multiplicities[self.times < t].sum())


def closed_form_times(kappa: float, horizon: float) -> np.ndarray:
    per = _lattice(kappa)
    count = math.ceil(horizon * per)
    times = np.arange(1, count + 1) / per
    return times[times < horizon]


def conjugate_profile(model: CrossModel, horizon: float, cross_check: bool = True,
                      step: float = ODE_STEP) -> ConjugateProfile:
    """Conjugate times in ``(0, horizon)`` with multiplicities.

    With ``cross_check`` every spectrum entry is also integrated as an ODE and
    the largest distance between the two zero sets is recorded.
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    merged: dict[float, int] = {}
    deviation = 0.0 if cross_check else None
    for kappa, mult in model.spectrum:
        exact = closed_form_times(kappa, horizon)
        for t in exact:
            key = round(float(t), 12)
            merged[key] = merged.get(key, 0) + mult
        if cross_check:
            numeric = kernels.jacobi_rk4_zeros(kappa, horizon, step)
            deviation = max(deviation, _zero_set_distance(exact, numeric, horizon))
    times = np.array(sorted(merged), dtype=np.float64)
    mults = np.array([merged[t] for t in sorted(merged)], dtype=np.int64)
    return ConjugateProfile(times, mults, float(horizon), deviation)


def _zero_set_distance(exact, numeric, horizon) -> float:
    # zeros within one step of the horizon may legitimately appear in only one set
    keep_e = exact[exact < horizon - 10 * ODE_STEP]
    keep_n = numeric[numeric < horizon - 10 * ODE_STEP]
    if keep_e.size != keep_n.size:
        return math.inf
    if keep_e.size == 0:
        return 0.0
    return float(np.max(np.abs(keep_e - keep_n)))


def geodesic_index(model: CrossModel, t: float) -> int:
    """Conjugate points in ``(0, t)`` with multiplicity; ``t`` must not be conjugate."""
    if not t > 0:
        raise DomainError("time must be positive")
    for kappa, _ in model.spectrum:
        per = _lattice(kappa)
        if abs(t * per - round(t * per)) <= CONJ_TOL * per:
            raise DegenerateTimeError(f"t={t!r} is a conjugate time of {model}")
    return _index_open(model.spectrum, Fraction(t))


def intersection_index(model: CrossModel, m: int, i: int, sign: str, delta: float) -> int:
    """Index of the intersection point at ``tau = i + delta`` (``+``) or ``i + 1 - delta`` (``-``)."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if not 0 <= i < m:
        raise DomainError(f"i must lie in 0..{m - 1}")
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if sign not in ("+", "-"):
        raise DomainError("sign must be '+' or '-'")
    tau = i + delta if sign == "+" else i + 1 - delta
    return geodesic_index(model, tau)


def orientability(model: CrossModel) -> bool:
    return model.orientable


def tabulated_index(model: CrossModel) -> int:
    """Reference value of ``k`` per family, independent of the stored spectrum."""
    name, d = model.name, model.d
    if name == "S":
        return d - 1
    if name == "RP":
        return 0
    if name in ("CP", "CPquot"):
        return 1
    if name == "HP":
        return 3
    if name == "CaP2":
        return 7
    if name == "SphereQuotient":
        return 0 if "with -id" in model.label else d - 1
    raise DomainError(f"no tabulated index for {model}")
