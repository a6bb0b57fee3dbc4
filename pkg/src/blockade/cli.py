"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 at least one grid point failed
(its row still carries the error string).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .powerlaw import fit_power_law
from .sweep import PRESETS, ConfigError, SweepSpec, export, parse, preset, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_POINT_FAILED = 2


def load_config(path) -> list:
    """Sweep specs from a TOML file.

    The file either names a ``preset`` or describes one sweep with top-level
    ``name``/``model``/``observables`` plus ``[axis]``, ``[fixed]``,
    ``[solver]`` and ``[options]`` tables.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    solver = data.pop("solver", {})
    if "preset" in data:
        name = data.pop("preset")
        if data:
            raise ConfigError(f"a preset config only takes [solver], found {sorted(data)}")
        return [_apply_solver(s, solver) for s in preset(name)]
    data.setdefault("name", Path(path).stem)
    return [_apply_solver(SweepSpec.from_dict(data), solver)]


def _apply_solver(spec: SweepSpec, solver: dict) -> SweepSpec:
    known = {"n_max_1", "n_max_2", "n_max_ph", "tol"}
    extra = set(solver) - known
    if extra:
        raise ConfigError(f"unknown [solver] keys {sorted(extra)}")
    return spec.replace(**solver) if solver else spec


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors, keeping 2 for failed points
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockade", description="Photon-blockade sweeps and fits.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("sweep", help="run a preset or configured parameter sweep")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS))
    source.add_argument("--config", type=Path, help="TOML sweep description")
    run.add_argument("--out", type=Path, help="output file; several specs get '-<name>' appended to the stem")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--nmax1", type=int, help="mode-1 Fock cutoff")
    run.add_argument("--nmax2", type=int, help="mode-2 Fock cutoff")
    run.add_argument("--nmaxph", type=int, help="reduced-model Fock cutoff")
    run.add_argument("--tol", type=float, help="steady-state residual tolerance")
    run.add_argument("--timing", action="store_true", help="include per-point wall time")

    sub.add_parser("presets", help="list preset names")

    fit = sub.add_parser("fit", help="power-law fit of one exported column against the axis")
    fit.add_argument("input", type=Path)
    fit.add_argument("--y", required=True, help="column to fit")
    fit.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    fit.add_argument("--format", choices=("csv", "json"))
    return parser


def _output_path(out: Path, spec: SweepSpec, multiple: bool) -> Path:
    if not multiple:
        return out
    return out.with_name(f"{out.stem}-{spec.name}{out.suffix}")


def _sweep(args) -> int:
    specs = preset(args.preset) if args.preset else load_config(args.config)
    overrides = {k: v for k, v in (("n_max_1", args.nmax1), ("n_max_2", args.nmax2),
                                   ("n_max_ph", args.nmaxph), ("tol", args.tol)) if v is not None}
    specs = [s.replace(**overrides) for s in specs]
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    status = EXIT_OK
    for spec in specs:
        result = run_sweep(spec, workers=args.workers)
        path = _output_path(args.out, spec, len(specs) > 1) if args.out else None
        text = export(result, args.format, path, include_timing=args.timing)
        if path is None:
            sys.stdout.write(text)
        else:
            print(f"wrote {path} ({len(result.rows)} rows)", file=sys.stderr)
        for row in result.rows:
            if row.error:
                print(f"{spec.name}: {spec.axis.name}={row.value:g}: {row.error}", file=sys.stderr)
        if result.failed:
            status = EXIT_POINT_FAILED
    return status


def _fit(args) -> int:
    fmt = args.format or ("json" if args.input.suffix == ".json" else "csv")
    try:
        text = args.input.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from exc
    result = parse(text, fmt)
    x = result.axis_values
    y = result.column(args.y)
    ok = ~np.isnan(y)
    fit = fit_power_law(x[ok], y[ok], tuple(args.window) if args.window else None)
    print(f"exponent={fit.exponent:.6g} prefactor={fit.prefactor:.6g} "
          f"r_squared={fit.r_squared:.6f} points={fit.n_points}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name in sorted(PRESETS):
                specs = preset(name)
                print(f"{name}: " + ", ".join(s.name for s in specs))
            return EXIT_OK
        if args.command == "fit":
            return _fit(args)
        return _sweep(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

