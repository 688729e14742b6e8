"""Experiment runner: ``slowgrowth run config.yaml`` writes a JSON report and CSV series."""
from __future__ import annotations

import argparse
import csv
import io
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .action import (
    SampledCurve,
    equilibrium_gap,
    flux_pairing,
    loop_series,
    orbit_action,
)
from .dynamics import (
    ClassicalHam,
    CosineBump,
    FiberShift,
    FourierPotential,
    PlateauProfile,
    RadialBall,
    Twist,
    TwistProfile,
    ambient_norm,
    classical_orbit,
    random_support_points,
)
from .errors import DomainError, NumericalError, UnsupportedModelError
from .floer import (
    cf_ranks,
    gap_certificate,
    geometric_intersections,
    hf_eligible,
    hf_rank,
    intersection_points,
    variation_pairing,
    fiber_image_class,
)
from .geometry import CylinderTS1, EuclideanBall, RoundSphereCotangent, ball_witness, fiber_disc
from .growth import (
    GrowthSeries,
    RefinePolicy,
    gamma_series,
    log_schedule,
    slow_exponent,
    volume_series,
    witness_volume,
)
from .jacobi import model_from_name, tabulated_index

SCHEMA_VERSION = 1

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class BudgetExhausted(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config parsing


def _plain(node, marks, path=()):
    """Convert a composed YAML node to Python data, recording each path's line (1-based)."""
    marks[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", key_node.start_mark.line + 1)
            out[key] = _plain(value_node, marks, path + (key,))
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, marks, path + (i,)) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


# section -> key -> (type(s), default). ``None`` default means optional.
_COMMON = {
    "experiment": (str, None),
    "seed": (int, 0),
    "model": (dict, {}),
    "map": (dict, {}),
    "schedule": (dict, {}),
    "tol": (dict, {}),
    "out": (dict, {}),
}

_SECTION_KEYS = {
    "model": {"name": str, "param": int, "contains_minus_id": bool, "dim": int, "length": float,
              "d": int, "models": list},
    "map": {"kind": str, "m": int, "modulation": float, "amplitude": float, "centre": float,
            "half_width": float, "r0": float, "r1": float, "loop_p0": float, "loop_amp": float},
    "schedule": {"n_max": int, "ratio": float, "ns": list, "m_max": int, "m_values": list,
                 "deltas": list, "n": int, "witnesses": list, "samples": int,
                 "geometric_m_max": int},
    "tol": {"rel_tol": float, "edge_len_max": float, "slope_lo": float, "slope_hi": float,
            "residual_max": float, "slice_rel": float, "ratio_rel": float, "action_rel": float,
            "flux_abs": float, "slack": float, "length_factor": float, "max_vertices": int,
            "max_cells": int},
    "out": {"dir": str, "stem": str},
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    model: dict
    map: dict
    schedule: dict
    tol: dict
    out: dict
    source: str = ""
    marks: dict = field(default_factory=dict, repr=False)

    def line(self, *path) -> int | None:
        while path and path not in self.marks:
            path = path[:-1]
        return self.marks.get(path)

    def echo(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "model": self.model,
                "map": self.map, "schedule": self.schedule, "tol": self.tol, "out": self.out}


def _check_type(value, kind, line, where):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{where} must be an integer", line)
    if not isinstance(value, kind):
        raise ConfigError(f"{where} must be of type {kind.__name__}", line)
    return value


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if node is None:
        raise ConfigError("empty config")
    marks: dict = {}
    data = _plain(node, marks)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", marks.get(()))
    values = {}
    for key in data:
        if key not in _COMMON:
            raise ConfigError(f"unknown top-level key {key!r}", marks.get((key,)))
    for key, (kind, default) in _COMMON.items():
        if key not in data:
            if default is None:
                raise ConfigError(f"missing required key {key!r}", 1)
            values[key] = type(default)(default) if isinstance(default, dict) else default
            continue
        value = data[key]
        if value is None and kind is dict:
            value = {}
        values[key] = _check_type(value, kind, marks.get((key,)), key)
    for section, allowed in _SECTION_KEYS.items():
        sec = values[section]
        for key, value in list(sec.items()):
            line = marks.get((section, key))
            if key not in allowed:
                raise ConfigError(f"unknown key {section}.{key}", line)
            sec[key] = _check_type(value, allowed[key], line, f"{section}.{key}")
    if values["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {values['experiment']!r} "
                          f"(one of {', '.join(sorted(EXPERIMENTS))})", marks.get(("experiment",)))
    for key, value in values["tol"].items():
        if not value > 0:
            raise ConfigError(f"tolerance tol.{key} must be positive", marks.get(("tol", key)))
    sched = values["schedule"]
    for key in ("n_max", "m_max", "n", "samples", "geometric_m_max"):
        if key in sched and sched[key] < (0 if key == "n" else 1):
            raise ConfigError(f"schedule.{key} must be positive", marks.get(("schedule", key)))
    if "ratio" in sched and not sched["ratio"] > 1:
        raise ConfigError("schedule.ratio must exceed 1", marks.get(("schedule", "ratio")))
    for key in ("ns", "m_values", "witnesses"):
        for k, v in enumerate(sched.get(key, [])):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"schedule.{key} entries must be positive integers",
                                  marks.get(("schedule", key, k)))
    for k, v in enumerate(sched.get("deltas", [])):
        if not isinstance(v, (int, float)) or not 0 < v < 0.5:
            raise ConfigError("schedule.deltas entries must lie in (0, 1/2)",
                              marks.get(("schedule", "deltas", k)))
    return ExperimentConfig(source=source, marks=marks, **values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


# ---------------------------------------------------------------------------
# reports


@dataclass
class Verdict:
    name: str
    passed: bool
    observed: object
    expected: object
    tolerance: object = None

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "observed": self.observed,
                "expected": self.expected, "tolerance": self.tolerance}


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    series: dict = field(default_factory=dict)      # label -> list of (n, value, error)
    records: list = field(default_factory=list)
    estimates: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    status: str = "complete"
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "complete" and all(v.passed for v in self.verdicts)

    def check(self, name, passed, observed, expected, tolerance=None):
        self.verdicts.append(Verdict(name, bool(passed), observed, expected, tolerance))

    def add_series(self, label: str, series: GrowthSeries | list):
        if isinstance(series, GrowthSeries):
            rows = series.rows()
        else:
            rows = [(int(n), float(v), float(e)) for n, v, e in series]
        self.series[label] = rows

    def exit_code(self) -> int:
        if self.status == "budget_exhausted":
            return EXIT_BUDGET
        return EXIT_PASS if self.passed else EXIT_FAIL

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "package_version": __version__,
            "backend": BACKEND,
            "experiment": self.config.experiment,
            "seed": self.config.seed,
            "config": self.config.echo(),
            "status": self.status,
            "passed": self.passed,
            "series": {k: [{"n": n, "value": v, "richardson_error": e} for n, v, e in rows]
                       for k, rows in self.series.items()},
            "records": self.records,
            "estimates": self.estimates,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "wall_clock_seconds": self.wall_clock,
        }


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def dump_json(obj, indent: int = 2, level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dump_json(str(k))}: {dump_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dump_json(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        return dump_json(obj.tolist(), indent, level)
    text = str(obj)
    out = ['"']
    for ch in text:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def series_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "value", "richardson_error"])
    for n, v, e in rows:
        writer.writerow([int(n), _fmt_float(v), _fmt_float(e)])
    return buf.getvalue()


def write_report(report: ExperimentReport, out_dir: Path | None = None) -> list[Path]:
    cfg = report.config
    out_dir = Path(out_dir or cfg.out.get("dir", "results"))
    stem = cfg.out.get("stem", cfg.experiment)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / f"{stem}.json"
    path.write_text(dump_json(report.as_dict()) + "\n")
    written.append(path)
    for label, rows in report.series.items():
        path = out_dir / f"{stem}_{label}.csv"
        path.write_text(series_csv(rows))
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# experiments


def _policy(cfg: ExperimentConfig) -> RefinePolicy:
    tol = cfg.tol
    base = RefinePolicy()
    return RefinePolicy(rel_tol=tol.get("rel_tol", base.rel_tol),
                        edge_len_max=tol.get("edge_len_max", base.edge_len_max),
                        max_vertices=tol.get("max_vertices", base.max_vertices),
                        max_cells=tol.get("max_cells", base.max_cells))


def _schedule(cfg: ExperimentConfig, default_n_max: int = 512) -> list[int]:
    sched = cfg.schedule
    if "ns" in sched:
        return sorted(set(sched["ns"]))
    return log_schedule(sched.get("n_max", default_n_max), sched.get("ratio", 1.5))


def _slope_checks(report, label, series, cfg, dim_i=None, gamma_slope=None):
    tol = cfg.tol
    lo, hi = tol.get("slope_lo", 0.9), tol.get("slope_hi", 1.1)
    est = slow_exponent(series)
    report.estimates[label] = {"slope": est.slope, "intercept": est.intercept,
                               "window": list(est.window), "residual": est.residual,
                               "samples": est.samples, "assumption": est.assumption}
    report.check(f"{label}: slope in [{lo}, {hi}]", lo <= est.slope <= hi, est.slope, [lo, hi])
    if "residual_max" in tol:
        report.check(f"{label}: fit residual", est.residual < tol["residual_max"], est.residual,
                     f"< {tol['residual_max']}")
    if gamma_slope is not None and dim_i is not None:
        slack = tol.get("slack", 0.1)
        bound = dim_i * gamma_slope + slack
        report.check(f"{label}: s <= i * gamma + slack", est.slope <= bound, est.slope,
                     f"<= {bound}", slack)
    return est


def _series_or_budget(report, label, series: GrowthSeries):
    report.add_series(label, series)
    if series.truncated:
        report.status = "budget_exhausted"
        raise BudgetExhausted(f"{label}: refinement budget exhausted after n={series.ns[-1] if len(series) else 0}")


def _gamma_slope(map_, cfg, sched, rng) -> float:
    pts = random_support_points(map_, cfg.schedule.get("samples", 200), rng)
    return slow_exponent(gamma_series(map_, pts, max(sched), schedule=sched)).slope


def run_ball_growth(cfg: ExperimentConfig, report: ExperimentReport, rng):
    dim = cfg.model.get("dim", 4)
    ball = RadialBall(PlateauProfile.for_ball(dim), EuclideanBall(dim))
    sched = _schedule(cfg)
    gamma = _gamma_slope(ball, cfg, sched, rng)
    report.estimates["gamma_slope"] = gamma
    slice_rel = cfg.tol.get("slice_rel", 0.01)
    for i in cfg.schedule.get("witnesses", [1, 2, 3]):
        label = f"sigma{i}"
        series = volume_series(ball, ball_witness(ball.model, i), max(sched), _policy(cfg), sched)
        _series_or_budget(report, label, series)
        _slope_checks(report, label, series, cfg, i, gamma)
        worst = 0.0
        for n, value, _ in series.rows():
            ref = witness_volume(ball.profile, i, n)
            err = abs(value - ref) / ref
            worst = max(worst, err)
            report.records.append({"witness": i, "n": n, "volume": value, "integrand_volume": ref,
                                   "relative_difference": err})
        report.check(f"{label}: slice volumes match integrand quadrature", worst <= slice_rel,
                     worst, f"<= {slice_rel}", slice_rel)


def run_twist(cfg: ExperimentConfig, report: ExperimentReport, rng):
    kind = cfg.model.get("name", "sphere")
    m = cfg.map.get("m", 1)
    profile = TwistProfile.generic(cfg.map.get("r0", 0.25), cfg.map.get("r1", 0.75))
    sched = _schedule(cfg)
    if kind == "cylinder":
        model = CylinderTS1(cfg.model.get("length", 1.0))
        twist = Twist(model, profile, m)
        disc = fiber_disc(model, [0.0], 1.0, 11)
        dim_i = 1
    elif kind == "sphere":
        model = RoundSphereCotangent(d=cfg.model.get("d", 2))
        twist = Twist(model, profile, m)
        disc = fiber_disc(model, model.north_pole(), 1.0, 9)
        dim_i = model.d
    else:
        raise ConfigError(f"twist-growth model.name must be cylinder or sphere, not {kind!r}",
                          cfg.line("model", "name"))
    gamma = _gamma_slope(twist, cfg, sched, rng)
    report.estimates["gamma_slope"] = gamma
    series = volume_series(twist, disc, max(sched), _policy(cfg), sched)
    _series_or_budget(report, "volume", series)
    _slope_checks(report, "volume", series, cfg, dim_i, gamma)
    if kind == "cylinder":
        target = 2.0 * model.length * abs(m)
        rel = cfg.tol.get("ratio_rel", 0.05)
        late = [(n, v / n) for n, v, _ in series.rows() if n >= 256]
        worst = max((abs(r - target) / target for _, r in late), default=math.inf)
        report.records += [{"n": n, "value_over_n": r} for n, r in late]
        report.check("volume / n -> 2 L |m| for n >= 256", worst <= rel, worst, target, rel)


def run_gamma(cfg: ExperimentConfig, report: ExperimentReport, rng):
    model = RoundSphereCotangent(d=cfg.model.get("d", 2))
    twist = Twist(model, TwistProfile.generic(), cfg.map.get("m", 1))
    sched = _schedule(cfg)
    pts = random_support_points(twist, cfg.schedule.get("samples", 200), rng)
    series = gamma_series(twist, pts, max(sched), schedule=sched)
    report.add_series("gamma", series)
    _slope_checks(report, "gamma", series, cfg)
    ratio = series.values / series.ns
    report.estimates["gamma_over_n"] = [float(ratio.min()), float(ratio.max())]
    amb = np.array([float(np.max(ambient_norm(twist, pts, n))) for n in sched])
    # the shear part of D phi^n is n m f''(r): |D phi^n| <= 1 + n m max f''
    cap = abs(twist.m) * twist.profile.max_d2()
    upper = 1.0 + series.ns * cap
    report.check("gamma_n <= 1 + n m max f''", bool(np.all(series.values <= upper * (1 + 1e-9))),
                 float(np.max(series.values / upper)), "<= 1")
    window = ratio[len(ratio) // 2:]
    spread = float(window.max() / window.min())
    report.check("gamma_n / n stable over the fit window", spread <= 1.5, spread, "<= 1.5")
    report.records = [{"n": n, "gamma": g, "ambient_norm": a}
                      for n, g, a in zip(sched, series.values.tolist(), amb.tolist())]


def run_pendulum(cfg: ExperimentConfig, report: ExperimentReport, rng):
    ham = ClassicalHam(FourierPotential.pendulum(cfg.map.get("modulation", 0.0)))
    ns = cfg.schedule.get("ns", [1, 2, 4, 8, 16, 32, 64])
    tol = cfg.tol
    stable, unstable = 0.0, 0.5
    gap = equilibrium_gap(ham, stable, unstable)
    orbits = {}
    for label, q in (("stable", stable), ("unstable", unstable)):
        orb = classical_orbit(ham, [q, 0.0])
        if orb is None:
            raise NumericalError(f"no periodic orbit near the {label} equilibrium")
        orbits[label] = orbit_action(ham, orb)
    measured_gap = orbits["stable"].value - orbits["unstable"].value
    report.estimates.update(gap=gap, action_stable=orbits["stable"].value,
                            action_unstable=orbits["unstable"].value)
    report.check("action gap of the equilibria", abs(measured_gap - gap) <= 1e-6 * abs(gap),
                 measured_gap, gap, 1e-6)
    try:
        loops = loop_series(ham, [unstable, 0.0], [stable, 0.0], ns, gap,
                            tol.get("edge_len_max", 0.05))
    except DomainError as exc:
        report.status = "budget_exhausted"
        raise BudgetExhausted(str(exc)) from None
    rel_max = tol.get("action_rel", 0.01)
    report.add_series("loop_integral", [(r.n, r.integral, abs(r.integral - r.expected))
                                        for r in loops.rows])
    report.add_series("loop_length", [(r.n, r.length, 0.0) for r in loops.rows])
    worst = float(loops.relative_errors().max())
    report.check("loop integral = n c", worst <= rel_max, worst, f"<= {rel_max}", rel_max)
    c = gap
    R = loops.sublevel_radius if loops.sublevel_radius is not None else loops.endpoint_radius
    report.estimates.update(radius=R, sublevel_radius=loops.sublevel_radius)
    tested = [r for r in loops.rows if r.n >= 4 * R * R]
    ok = all(r.length >= min(c, 1.0) * math.sqrt(r.n) for r in tested)
    report.check("length >= min(c, 1) sqrt(n) for n >= 4 R^2", ok,
                 [r.length for r in tested], [min(c, 1.0) * math.sqrt(r.n) for r in tested])
    if ham.potential.autonomous:
        factor = tol.get("length_factor", 0.95)
        ok = all(r.length >= factor * (c / R) * r.n for r in loops.rows)
        report.check(f"length >= {factor} (c / R) n", ok, [r.length for r in loops.rows],
                     [factor * c / R * r.n for r in loops.rows])
    report.records = [{"n": r.n, "integral": r.integral, "expected": r.expected,
                       "length": r.length, "samples": r.samples} for r in loops.rows]


def run_flux(cfg: ExperimentConfig, report: ExperimentReport, rng):
    mp, tol = cfg.map, cfg.tol
    bump = CosineBump(mp.get("amplitude", 0.5), mp.get("centre", 0.0), mp.get("half_width", 0.5))
    shift = FiberShift(bump)
    model = shift.model
    edge = tol.get("edge_len_max", 0.05)
    abs_tol = tol.get("flux_abs", 1e-6)
    # polygonal error is O(chord^2 |h''|); narrow bumps need chords well below edge_len_max
    fine = min(edge, 0.002)
    span = abs(bump.centre) + bump.half_width + 0.5
    line = SampledCurve.segment(model, [0.0, -span], [0.0, span], fine)
    ns = cfg.schedule.get("ns", list(range(1, 9)))
    values = [flux_pairing(shift, line, n, fine) for n in ns]
    base = flux_pairing(shift, line, 1, fine)
    report.add_series("fiber_shift", [(n, v, 0.0) for n, v in zip(ns, values)])
    dev = max(abs(v - n * base) for n, v in zip(ns, values))
    report.check("flux linear in n", dev <= abs_tol, dev, f"<= {abs_tol}", abs_tol)
    report.check("flux at n = 1 equals -int h", abs(base + bump.integral()) <= abs_tol, base,
                 -bump.integral(), abs_tol)
    ham = ClassicalHam(FourierPotential.pendulum(mp.get("modulation", 0.0)))
    p0, amp = mp.get("loop_p0", 0.2), mp.get("loop_amp", 0.1)
    loop = SampledCurve.from_function(
        model, lambda t: np.concatenate([t, p0 + amp * np.sin(2 * math.pi * t)], axis=-1),
        0.0, model.length, closed=True, edge_len_max=fine)
    ham_flux = flux_pairing(ham, loop, 1, fine)
    report.estimates.update(flux_slope=base, hamiltonian_loop_flux=ham_flux)
    report.check("Hamiltonian loop flux vanishes", abs(ham_flux) < abs_tol, ham_flux,
                 f"< {abs_tol}", abs_tol)


def _models(cfg: ExperimentConfig):
    entries = cfg.model.get("models")
    if entries is None:
        if "name" in cfg.model:
            entries = [cfg.model]
        else:
            entries = DEFAULT_MODELS
    out = []
    for k, entry in enumerate(entries):
        line = cfg.line("model", "models", k)
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError("each model entry needs a name", line)
        try:
            out.append(model_from_name(entry["name"], entry.get("param"),
                                       entry.get("contains_minus_id")))
        except DomainError as exc:
            raise ConfigError(str(exc), line) from None
    return out


DEFAULT_MODELS = [
    {"name": "S", "param": 2}, {"name": "S", "param": 3}, {"name": "S", "param": 4},
    {"name": "S", "param": 7}, {"name": "RP", "param": 2}, {"name": "RP", "param": 3},
    {"name": "CP", "param": 2}, {"name": "CP", "param": 3}, {"name": "HP", "param": 1},
    {"name": "HP", "param": 2}, {"name": "CaP2"},
    {"name": "SphereQuotient", "param": 3, "contains_minus_id": True},
    {"name": "SphereQuotient", "param": 5, "contains_minus_id": False},
    {"name": "CPquot", "param": 3},
]


def run_index_table(cfg: ExperimentConfig, report: ExperimentReport, rng):
    # one exact-match verdict per family, covering every listed member
    families: dict[str, list] = {}
    for model in _models(cfg):
        k, want = model.k, tabulated_index(model)
        report.records.append({"model": str(model), "d": model.d, "k": k, "expected": want})
        families.setdefault(model.name, []).append((str(model), k, want))
    for name, rows in families.items():
        report.check(f"{name}: k matches the table", all(k == w for _, k, w in rows),
                     {m: k for m, k, _ in rows}, {m: w for m, _, w in rows})


def _m_values(cfg, default_max=5):
    sched = cfg.schedule
    if "m_values" in sched:
        return sorted(set(sched["m_values"]))
    return list(range(1, sched.get("m_max", default_max) + 1))


def _expected_grading(model, m) -> dict:
    k, d = model.k, model.d
    if k >= 1:
        degs = [i * (k + d - 1) for i in range(m)] + [i * (k + d - 1) + k for i in range(m)]
        return {deg: degs.count(deg) for deg in sorted(set(degs))}
    if d > 1:
        return {i * (d - 1): 2 for i in range(m)}
    return {0: 2 * m}


def _slug(label: str) -> str:
    """File-name safe label: ``SphereQuotient(3, with -id)`` -> ``SphereQuotient_3_with_-id``."""
    return "_".join(re.findall(r"[A-Za-z0-9-]+", label))


def run_floer(cfg: ExperimentConfig, report: ExperimentReport, rng):
    for model in _models(cfg):
        rows = []
        for m in _m_values(cfg):
            cf = cf_ranks(model, m)
            want = _expected_grading(model, m)
            report.check(f"{model}, m={m}: CF grading", cf.as_dict() == want, cf.as_dict(), want)
            entry = {"model": str(model), "m": m, "cf": cf.as_dict(), "cf_total": cf.total}
            if hf_eligible(model):
                hf = hf_rank(model, m)
                entry["hf_total"] = hf.total
                report.check(f"{model}, m={m}: HF total = 2m", hf.total == 2 * m, hf.total, 2 * m)
                if model.k != 1 and model.d != 2:
                    entry["gap_certificate"] = gap_certificate(hf)
                    report.check(f"{model}, m={m}: degree gap", entry["gap_certificate"], True, True)
            else:
                entry["hf_total"] = None
                report.check(f"{model}, m={m}: CF total = 2m", cf.total == 2 * m, cf.total, 2 * m)
            report.records.append(entry)
            rows.append((m, float(entry["hf_total"] if entry["hf_total"] is not None else cf.total), 0.0))
        report.add_series(_slug(str(model)), rows)


def run_variation(cfg: ExperimentConfig, report: ExperimentReport, rng):
    n = cfg.schedule.get("n", 1)
    for model in _models(cfg):
        if not model.orientable:
            report.records.append({"model": str(model), "skipped": "not orientable"})
            continue
        for m in _m_values(cfg):
            var = variation_pairing(model, m)
            entry = {"model": str(model), "m": m, "variation": var}
            if model.k % 2:
                report.check(f"{model}, m={m}: pairing vanishes for odd k", var == 0, var, 0)
            elif model.d % 2:
                report.check(f"{model}, m={m}: pairing = 2m", var == 2 * m, var, 2 * m)
                cls = fiber_image_class(model, m, n)
                entry["fiber_image_class"] = list(cls)
                report.check(f"{model}, m={m}, n={n}: fiber image class", cls == (2 * m * n, 1),
                             list(cls), [2 * m * n, 1])
            report.records.append(entry)


def run_intersections(cfg: ExperimentConfig, report: ExperimentReport, rng):
    sched = cfg.schedule
    deltas = sched.get("deltas", [0.1, 0.25, 0.4])
    m_max = sched.get("m_max", 64)
    bad = []
    for delta in deltas:
        for m in range(1, m_max + 1):
            pts = intersection_points(m=m, delta=delta)
            if len(pts) != 2 * m:
                bad.append((m, delta, len(pts)))
    report.check(f"combinatorial count = 2m for m <= {m_max}", not bad, bad, "none")
    rows = []
    for m in range(1, sched.get("geometric_m_max", 4) + 1):
        geo = geometric_intersections(m)
        exact = np.array([p.r for p in intersection_points(m=m)])
        rows.append((m, float(geo.count), 0.0))
        report.check(f"m={m}: geometric count = 2m", geo.count == 2 * m, geo.count, 2 * m)
        if geo.count == exact.size:
            dev = float(np.max(np.abs(geo.radii - exact)))
            report.check(f"m={m}: radii agree to mesh resolution", dev <= geo.cell_size, dev,
                         f"<= {geo.cell_size}")
        report.records.append({"m": m, "geometric_count": geo.count, "radii": geo.radii.tolist(),
                               "exact_radii": exact.tolist()})
    report.add_series("geometric_count", rows)


EXPERIMENTS = {
    "prop1-growth": (run_ball_growth, "volume growth of the ball witnesses under the plateau rotation"),
    "twist-growth": (run_twist, "fiber-disc volume growth under a twist (cylinder or 2-sphere)"),
    "pendulum-action": (run_pendulum, "loop integrals and lengths for the pendulum equilibria"),
    "flux-linearity": (run_flux, "flux of the fiber shift and of a Hamiltonian map"),
    "gamma": (run_gamma, "differential growth of the twist on the 2-sphere"),
    "index-table": (run_index_table, "geodesic indices of the model spaces"),
    "floer-ranks": (run_floer, "chain and homology ranks with their gradings"),
    "variation": (run_variation, "variation pairings and fiber image classes"),
    "intersections": (run_intersections, "intersection counts, combinatorial and geometric"),
}


def run(config: ExperimentConfig | str | Path, out_dir=None, quiet: bool = True,
        write: bool = True) -> tuple[ExperimentReport, int]:
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    report = ExperimentReport(cfg)
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    fn, _ = EXPERIMENTS[cfg.experiment]
    try:
        fn(cfg, report, rng)
    except BudgetExhausted as exc:
        report.status = "budget_exhausted"
        report.estimates["budget"] = str(exc)
    except (NumericalError, UnsupportedModelError) as exc:
        report.status = "error"
        report.check("experiment completed", False, str(exc), "no error")
    report.wall_clock = time.perf_counter() - start
    if write:
        paths = write_report(report, out_dir)
        if not quiet:
            for p in paths:
                print(f"wrote {p}")
    if not quiet:
        for v in report.verdicts:
            print(f"{'PASS' if v.passed else 'FAIL'}  {v.name}")
        print(f"{cfg.experiment}: {report.status}, "
              f"{sum(v.passed for v in report.verdicts)}/{len(report.verdicts)} verdicts pass, "
              f"{report.wall_clock:.2f} s")
    return report, report.exit_code()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowgrowth", description=__doc__)
    parser.add_argument("--list-experiments", action="store_true",
                        help="list experiment kinds and exit")
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("config", help="YAML config file")
    p_run.add_argument("--out", help="output directory (overrides out.dir)")
    p_run.add_argument("--quiet", action="store_true", help="suppress console output")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_experiments:
        for name, (_, text) in sorted(EXPERIMENTS.items()):
            print(f"{name:16s} {text}")
        return EXIT_PASS
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        _, code = run(cfg, args.out, quiet=args.quiet)
    except ConfigError as exc:
        print(f"{args.config}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
