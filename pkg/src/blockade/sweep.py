"""Declarative parameter sweeps over the full, reduced and closed-form models.

A :class:`SweepSpec` fixes a backend, a set of parameter overrides, one
swept axis and a list of observables. :func:`run_sweep` evaluates every grid
point independently (optionally in worker processes) and :func:`export`
writes the rows as CSV or JSON with round-trip exact floats.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .hilbert import ORDERING, HilbertSpec, basis_state
from .lindblad import (
    build_fme,
    evolve,
    fidelity,
    g2_zero,
    liouvillian,
    mean_photon,
    projected,
    steady_state,
)
from .model import SystemParams, manifold_projector
from .rme import ReducedBasis, build_rme, optimal_hopping, optimize_brightness
from .weakdrive import analytic_g2

SCHEMA_VERSION = 1
OBSERVABLES = ("n1", "n2", "g2_1", "g2_2", "fidelity_K", "infidelity_1mF", "purity_P")
MODELS = ("fme", "rme", "analytic")
PARAM_NAMES = tuple(f.name for f in dataclasses.fields(SystemParams))
TIME_AXIS = "t"

SUPPORTED = {
    "fme": set(OBSERVABLES),
    "rme": {"n1", "n2", "g2_1", "g2_2", "purity_P"},
    "analytic": {"g2_1", "g2_2", "purity_P"},
}


class ConfigError(ValueError):
    """Invalid sweep configuration; nothing was evaluated."""


@dataclass(frozen=True)
class Axis:
    """Swept parameter and its grid.

    ``kind`` is ``"log"`` (``count`` points from ``start`` to ``stop``, base 10),
    ``"linear"`` or ``"values"`` (explicit list).
    """

    name: str
    kind: str = "linear"
    start: float | None = None
    stop: float | None = None
    count: int | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("log", "linear", "values"):
            raise ConfigError(f"axis kind must be log, linear or values, got {self.kind!r}")
        if self.kind == "values":
            if not self.values:
                raise ConfigError("a values axis needs a nonempty 'values' list")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        else:
            if self.start is None or self.stop is None or self.count is None:
                raise ConfigError(f"a {self.kind} axis needs start, stop and count")
            if int(self.count) != self.count or self.count < 1:
                raise ConfigError(f"axis count must be a positive integer, got {self.count!r}")
            object.__setattr__(self, "start", float(self.start))
            object.__setattr__(self, "stop", float(self.stop))
            object.__setattr__(self, "count", int(self.count))
            if self.kind == "log" and not (self.start > 0 and self.stop > 0):
                raise ConfigError("log axis endpoints must be positive")
        grid = self.grid()
        if not np.all(np.isfinite(grid)):
            raise ConfigError("axis grid must be finite")
        steps = np.diff(grid)
        if grid.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ConfigError(f"axis {self.name!r} grid is not strictly monotone")

    def grid(self) -> np.ndarray:
        if self.kind == "values":
            return np.array(self.values, dtype=float)
        if self.kind == "log":
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)

    def as_dict(self) -> dict:
        if self.kind == "values":
            return {"name": self.name, "kind": "values", "values": list(self.values)}
        return {"name": self.name, "kind": self.kind, "start": self.start, "stop": self.stop, "count": self.count}


@dataclass(frozen=True)
class SweepSpec:
    """One sweep.

    ``fixed`` overrides :class:`SystemParams` fields; ``J`` may be the string
    ``"opt"`` to track the closed-form optimal hopping at each point's
    ``kappa2``. ``options`` holds backend extras: ``optimize`` (reduced model,
    maximize over ``J`` and ``Omega`` per point), ``rtol``/``atol`` for the
    time axis.
    """

    name: str
    model: str
    axis: Axis
    observables: tuple
    fixed: dict = field(default_factory=dict)
    n_max_1: int = 10
    n_max_2: int = 10
    n_max_ph: int = 30
    tol: float = 1e-9
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        obs = tuple(self.observables)
        object.__setattr__(self, "observables", obs)
        if not obs:
            raise ConfigError("at least one observable is required")
        unknown = [o for o in obs if o not in OBSERVABLES]
        if unknown:
            raise ConfigError(f"unknown observables {unknown}; choose from {OBSERVABLES}")
        if len(set(obs)) != len(obs):
            raise ConfigError("duplicate observables")
        missing = [o for o in obs if o not in SUPPORTED[self.model]]
        if missing:
            raise ConfigError(f"the {self.model} backend cannot produce {missing}")
        for key, value in self.fixed.items():
            if key not in PARAM_NAMES:
                raise ConfigError(f"unknown parameter {key!r} in fixed")
            if key == "J" and value == "opt":
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"fixed parameter {key} must be a number, got {value!r}")
        if self.axis.name == TIME_AXIS:
            if self.model != "fme":
                raise ConfigError("the time axis is only available for the fme backend")
            grid = self.axis.grid()
            if grid[0] < 0 or (grid.size > 1 and grid[1] < grid[0]):
                raise ConfigError("time grid must be ascending from t >= 0")
        elif self.axis.name not in PARAM_NAMES:
            raise ConfigError(f"unknown axis parameter {self.axis.name!r}")
        if self.axis.name in self.fixed:
            raise ConfigError(f"{self.axis.name!r} is both swept and fixed")
        for name in ("n_max_1", "n_max_2", "n_max_ph"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        known = {"optimize", "rtol", "atol"}
        extra = set(self.options) - known
        if extra:
            raise ConfigError(f"unknown options {sorted(extra)}")
        if "optimize" in self.options:
            if self.model != "rme":
                raise ConfigError("optimize is only available for the rme backend")
            opt = self.options["optimize"]
            if not isinstance(opt, dict):
                raise ConfigError("optimize must be a table")
            extra = set(opt) - {"box", "fixed_J", "target", "grid", "rounds"}
            if extra:
                raise ConfigError(f"unknown optimize keys {sorted(extra)}")
        try:
            self.params_at(float(self.axis.grid()[0]) if self.axis.name != TIME_AXIS else None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def params_at(self, value) -> SystemParams:
        values = {k: v for k, v in self.fixed.items() if not (k == "J" and v == "opt")}
        if self.axis.name != TIME_AXIS:
            values[self.axis.name] = value
        params = SystemParams(**{k: float(v) for k, v in values.items()})
        if self.fixed.get("J") == "opt":
            params = params.replace(J=optimal_hopping(params.kappa2, params.kappa1))
        return params

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model,
            "axis": self.axis.as_dict(),
            "observables": list(self.observables),
            "fixed": dict(self.fixed),
            "n_max_1": self.n_max_1,
            "n_max_2": self.n_max_2,
            "n_max_ph": self.n_max_ph,
            "tol": self.tol,
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        data = dict(data)
        try:
            axis = data.pop("axis")
            if not isinstance(axis, dict):
                raise ConfigError("axis must be a table")
            axis = Axis(**axis)
            return cls(axis=axis, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        except KeyError as exc:
            raise ConfigError(f"missing key {exc}") from exc

    def replace(self, **changes) -> "SweepSpec":
        return dataclasses.replace(self, **changes)


@dataclass
class SweepRow:
    value: float
    observables: dict
    extras: dict
    residual: float | None
    error: str | None = None
    wall_time: float = 0.0


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    provenance: dict

    @property
    def failed(self) -> bool:
        return any(row.error for row in self.rows)

    def column(self, name: str) -> np.ndarray:
        """Observable or extra column as floats; failed points give ``nan``."""
        out = []
        for row in self.rows:
            v = row.observables.get(name, row.extras.get(name))
            out.append(np.nan if v is None else v)
        return np.array(out, dtype=float)

    @property
    def axis_values(self) -> np.ndarray:
        return np.array([row.value for row in self.rows], dtype=float)


def provenance(spec: SweepSpec) -> dict:
    return {
        "library": "blockade",
        "version": __version__,
        "ordering": ORDERING,
        "truncation": {"n_max_1": spec.n_max_1, "n_max_2": spec.n_max_2, "n_max_ph": spec.n_max_ph},
        "tolerances": {"steady_state": spec.tol},
    }


def _fme_observables(rho, spec: SweepSpec) -> dict:
    out = {}
    for name in spec.observables:
        if name == "n1":
            out[name] = mean_photon(rho, 1)
        elif name == "n2":
            out[name] = mean_photon(rho, 2)
        elif name == "g2_1":
            out[name] = g2_zero(rho, 1)
        elif name == "g2_2":
            out[name] = g2_zero(rho, 2)
        elif name == "purity_P":
            out[name] = 1.0 - g2_zero(rho, 2)
        else:
            f = fidelity(rho, projected(rho, manifold_projector(rho.spec)))
            out[name] = f if name == "fidelity_K" else 1.0 - f
    return out


def _evaluate(spec: SweepSpec, value: float) -> SweepRow:
    params = spec.params_at(value)
    extras = {}
    if spec.model == "analytic":
        obs = {}
        for name in spec.observables:
            if name == "g2_1":
                obs[name] = analytic_g2(params, 1)
            elif name == "g2_2":
                obs[name] = analytic_g2(params, 2)
            else:
                obs[name] = 1.0 - analytic_g2(params, 2)
        return SweepRow(value, obs, extras, 0.0)
    if spec.model == "rme":
        basis = ReducedBasis(spec.n_max_ph)
        opt = spec.options.get("optimize")
        if opt is not None:
            best = optimize_brightness(
                params,
                search_box=tuple(tuple(b) for b in opt.get("box", ((0.0, 1.0), (0.0, 1.5)))),
                basis=basis,
                fixed_J=opt.get("fixed_J"),
                target=opt.get("target", "n2"),
                grid=opt.get("grid", 64),
                rounds=opt.get("rounds", 3),
            )
            params = params.replace(J=best.J, Omega=best.Omega)
            extras = {"J_opt": best.J, "Omega_opt": best.Omega, "objective": best.value,
                      "on_boundary": float(best.on_boundary)}
        result = steady_state(liouvillian(build_rme(basis, params)), tol=spec.tol)
    else:
        hs = HilbertSpec(spec.n_max_1, spec.n_max_2)
        result = steady_state(liouvillian(build_fme(hs, params)), tol=spec.tol)
    return SweepRow(value, _fme_observables(result.rho, spec), extras, result.residual)


def _evaluate_point(args) -> SweepRow:
    spec, value = args
    t0 = time.perf_counter()
    try:
        row = _evaluate(spec, value)
    except Exception as exc:  # noqa: BLE001 - every per-point failure is recorded, never raised
        row = SweepRow(value, {name: None for name in spec.observables}, {}, None,
                       f"{type(exc).__name__}: {exc}")
    row.wall_time = time.perf_counter() - t0
    return row


def _time_rows(spec: SweepSpec) -> list:
    t0 = time.perf_counter()
    grid = spec.axis.grid()
    try:
        params = spec.params_at(None)
        hs = HilbertSpec(spec.n_max_1, spec.n_max_2)
        liou = liouvillian(build_fme(hs, params))
        rho0 = basis_state(hs, 0, 0, 0).projector()
        kwargs = {k: spec.options[k] for k in ("rtol", "atol") if k in spec.options}
        if grid[0] > 0:
            states = evolve(liou, rho0, np.concatenate([[0.0], grid]), **kwargs)[1:]
        else:
            states = evolve(liou, rho0, grid, **kwargs)
    except Exception as exc:  # noqa: BLE001
        err = f"{type(exc).__name__}: {exc}"
        return [SweepRow(float(t), {n: None for n in spec.observables}, {}, None, err) for t in grid]
    elapsed = (time.perf_counter() - t0) / grid.size
    rows = []
    for t, rho in zip(grid, states):
        # evolution rows report the trace drift in place of a solve residual
        drift = abs(rho.trace() - 1.0)
        try:
            row = SweepRow(float(t), _fme_observables(rho, spec), {}, drift)
        except Exception as exc:  # noqa: BLE001
            row = SweepRow(float(t), {n: None for n in spec.observables}, {}, drift,
                           f"{type(exc).__name__}: {exc}")
        row.wall_time = elapsed
        rows.append(row)
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every grid point; rows come back in grid order regardless of ``workers``."""
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    if spec.axis.name == TIME_AXIS:
        rows = _time_rows(spec)
    else:
        tasks = [(spec, float(v)) for v in spec.axis.grid()]
        if workers == 1 or len(tasks) == 1:
            rows = [_evaluate_point(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_evaluate_point, tasks))
    return SweepResult(spec, rows, provenance(spec))


# --- export ---------------------------------------------------------------

def _columns(result: SweepResult, include_timing: bool) -> list:
    extras = sorted({k for row in result.rows for k in row.extras})
    cols = [result.spec.axis.name, *result.spec.observables, *extras, "residual", "error"]
    if include_timing:
        cols.append("wall_time")
    return cols


def _fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".17g")


def _row_values(row: SweepRow, result: SweepResult, include_timing: bool) -> dict:
    out = {result.spec.axis.name: row.value}
    out.update(row.observables)
    out.update(row.extras)
    out["residual"] = row.residual
    out["error"] = row.error
    if include_timing:
        out["wall_time"] = row.wall_time
    return out


def to_csv(result: SweepResult, include_timing: bool = False) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps({"provenance": result.provenance}, sort_keys=True) + "\n")
    buf.write("# " + json.dumps({"spec": result.spec.as_dict()}, sort_keys=True) + "\n")
    cols = _columns(result, include_timing)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in result.rows:
        values = _row_values(row, result, include_timing)
        writer.writerow([values.get(c) or "" if c == "error" else _fmt(values.get(c)) for c in cols])
    return buf.getvalue()


def to_json(result: SweepResult, include_timing: bool = False) -> str:
    cols = _columns(result, include_timing)
    rows = []
    for row in result.rows:
        values = _row_values(row, result, include_timing)
        rows.append({c: values.get(c) for c in cols})
    doc = {"schema_version": SCHEMA_VERSION, "spec": result.spec.as_dict(),
           "provenance": result.provenance, "columns": cols, "rows": rows}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def export(result: SweepResult, fmt: str, path=None, include_timing: bool = False) -> str:
    """Serialize ``result`` as ``"csv"`` or ``"json"``; write it to ``path`` when given.

    Wall times are left out unless ``include_timing`` so identical runs export
    identical bytes.
    """
    if fmt == "csv":
        text = to_csv(result, include_timing)
    elif fmt == "json":
        text = to_json(result, include_timing)
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    if path is not None:
        path = Path(path)
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write sweep output to {path}: {exc}") from exc
    return text


def _row_from_mapping(values: dict, spec: SweepSpec) -> SweepRow:
    def num(v):
        return None if v in ("", None) else float(v)

    obs = {n: num(values.get(n)) for n in spec.observables}
    reserved = {spec.axis.name, "residual", "error", "wall_time", *spec.observables}
    extras = {k: num(v) for k, v in values.items() if k not in reserved}
    return SweepRow(float(values[spec.axis.name]), obs, extras, num(values.get("residual")),
                    values.get("error") or None, num(values.get("wall_time")) or 0.0)


def parse(text: str, fmt: str) -> SweepResult:
    """Inverse of :func:`export`."""
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
        spec = SweepSpec.from_dict(doc["spec"])
        rows = [_row_from_mapping(r, spec) for r in doc["rows"]]
        return SweepResult(spec, rows, doc["provenance"])
    if fmt != "csv":
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("# "):
            meta.update(json.loads(line[2:]))
        else:
            body.append(line)
    spec = SweepSpec.from_dict(meta["spec"])
    reader = csv.DictReader(io.StringIO("\n".join(body) + "\n"))
    rows = [_row_from_mapping(r, spec) for r in reader]
    return SweepResult(spec, rows, meta["provenance"])


# --- presets --------------------------------------------------------------

FIG2_WEAK = {"Omega": 1e-4, "Delta": 0.0, "kappa2": 1.0, "gamma": 0.01}
FIG3 = {"Omega": 0.5, "J": 0.1, "gamma": 0.01}
FIG5 = {"Omega": 0.5, "kappa2": 0.01, "gamma": 0.01, "J": "opt"}
FIG2_G_AXIS = Axis("g", "log", 0.1, 50.0, 12)


def _fig2(observable: str) -> list:
    specs = []
    for J in (0.1, 1.0, 2.5):
        fixed = {**FIG2_WEAK, "J": J}
        specs.append(SweepSpec(f"{J:g}-fme", "fme", FIG2_G_AXIS, (observable,), fixed))
        specs.append(SweepSpec(f"{J:g}-analytic", "analytic", Axis("g", "log", 0.1, 50.0, 200),
                               (observable,), fixed))
    return specs


def _fig2c() -> list:
    fixed = {k: v for k, v in FIG2_WEAK.items() if k != "Delta"}
    return [SweepSpec(f"g{g:g}", "analytic", Axis("Delta", "linear", -20.0, 20.0, 801), ("g2_2",),
                      {**fixed, "J": 0.1, "g": g}) for g in (0.1, 1.0, 10.0)]


def _fig3a() -> list:
    return [SweepSpec(f"kappa2-{k2:g}", "fme", Axis("g", "log", 1.0, 50.0, 10), ("g2_2", "n2"),
                      {**FIG3, "kappa2": k2}) for k2 in (1.0, 0.1, 0.01)]


def _fig3d() -> list:
    axis = Axis("kappa2", "log", 1e-3, 1.0, 8)
    fixed = {**FIG3, "g": 20.0}
    return [SweepSpec("fme", "fme", axis, ("n2",), fixed), SweepSpec("rme", "rme", axis, ("n2",), fixed)]


def _fig4bcd() -> list:
    optimum = SweepSpec("rme-optimum", "rme", Axis("kappa2", "log", 1e-4, 1.0, 9), ("n2",), {"gamma": 0.01},
                        options={"optimize": {"box": [[0.0, 1.0], [0.0, 1.5]]}})
    crosses = SweepSpec("fme-crosses", "fme", Axis("kappa2", "values", values=(0.1, 0.01, 0.001)),
                        ("n2", "purity_P"), {"g": 20.0, "gamma": 0.01, "Omega": 0.5, "J": "opt"})
    return [optimum, crosses]


def _fig5ab() -> list:
    dynamics = [SweepSpec(f"dynamics-g{g:g}", "fme", Axis(TIME_AXIS, "linear", 0.0, 50.0, 51),
                          ("infidelity_1mF",), {**FIG5, "g": g}) for g in (5.0, 10.0, 20.0)]
    # J_opt / g spans [1e-3, 1e-1]
    j = optimal_hopping(0.01)
    scaling = SweepSpec("steady-vs-g", "fme", Axis("g", "log", j / 1e-1, j / 1e-3, 9),
                        ("infidelity_1mF",), dict(FIG5))
    return dynamics + [scaling]


def _fig6ab() -> list:
    axis = Axis("Gamma1", "log", 1e-2, 1e2, 9)
    specs = []
    for k2 in (0.1, 0.01, 0.001):
        fixed = {"kappa2": k2, "gamma": 0.01}
        specs.append(SweepSpec(f"p10-kappa2-{k2:g}", "rme", axis, ("n1",), {**fixed, "J": 0.0},
                               options={"optimize": {"box": [[0.0, 1.0], [0.0, 30.0]], "fixed_J": 0.0,
                                                     "target": "p10"}}))
        specs.append(SweepSpec(f"n2-kappa2-{k2:g}", "rme", axis, ("n2",), fixed,
                               options={"optimize": {"box": [[0.0, 3.0], [0.0, 30.0]]}}))
    return specs


PRESETS = {
    "fig2a": lambda: _fig2("g2_1"),
    "fig2b": lambda: _fig2("g2_2"),
    "fig2c": _fig2c,
    "fig3a": _fig3a,
    "fig3d": _fig3d,
    "fig4bcd": _fig4bcd,
    "fig5ab": _fig5ab,
    "fig6ab": _fig6ab,
}


def preset(name: str) -> list:
    """Named bundle of sweep specs; always a list."""
    try:
        build = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    return [s.replace(name=f"{name}-{s.name}") for s in build()]
