"""Command-line front end: ``simulate``, ``norms`` and ``experiment <name>``.

Every option may also come from ``--config FILE``, a flat ``key = value``
text file (``#`` starts a comment, keys are the long option names with
``-`` or ``_``).  Options given on the command line win over the file.  A
``manifest.json`` written by an earlier run is also accepted as a config,
which reruns it with the same resolved settings.

Exit codes: 0 success, 2 configuration error, 3 blow-up guard tripped.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import spectral_core
from .evolution import BlowupDetected, SolverConfig, solve
from .experiments import (
    ExperimentReport,
    continuous_dependence_experiment,
    counterexample_grid,
    make_bump,
    make_fn,
    nonuniform_experiment,
    picard_experiment,
    power_law_data,
    prop31_check,
    rl_lower_bound,
    smooth_data,
)
from .field_io import atomic_write_text, read_field, write_field
from .littlewood_paley import (
    NormKind,
    SpaceParams,
    besov_norm,
    build_partition,
    spectrum_csv,
    tl_norm,
)
from .spectral_core import PeriodicGrid, VectorField

__all__ = ["main", "ConfigError", "load_config"]

OUT_ENV = "EP_SPECTRA_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP = 0, 2, 3
TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    pass


# --- parameter tables -------------------------------------------------------

def _auto_float(v: str) -> float | None:
    return None if str(v).strip().lower() in ("auto", "none", "") else float(v)


def _bool(v: str) -> bool:
    t = str(v).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _index(v: str) -> float:
    return math.inf if str(v).strip().lower() in ("inf", "infinity") else float(v)


@dataclass(frozen=True)
class Param:
    name: str
    type: Callable[[str], Any]
    default: Any
    help: str = ""


_GRID = [
    Param("d", int, 1, "spatial dimension"),
    Param("nx", int, 256, "points per axis (power of two)"),
    Param("period", float, TWO_PI, "box period"),
]
_SPACE = [
    Param("s", float, 2.0, "regularity"),
    Param("p", float, 2.0, "integrability"),
    Param("r", _index, 2.0, "Triebel-Lizorkin summability"),
]
_DATA = [
    Param("init", str, "smooth", "zero | smooth | powerlaw | fn | path to a field file"),
    Param("amplitude", float, 1.0, "scale of builtin data"),
    Param("decay", _auto_float, None, "powerlaw: |c_k| ~ |k|^-decay (auto: s + d/2)"),
    Param("k_max", _auto_float, None, "powerlaw: largest |k| in lattice units (auto: N/3)"),
    Param("seed", int, 0, "powerlaw: phase seed"),
    Param("n", int, 4, "fn: dyadic index (the grid is chosen to resolve it)"),
]
_TIME = [
    Param("dt", float, 0.01, "time step"),
    Param("tfinal", float, 1.0, "final time"),
    Param("blowup", _auto_float, None, "guard on ||grad u||_inf (auto: 10x initial)"),
    Param("record_every", int, 1, "record every k-th step"),
]

TABLES: dict[str, list[Param]] = {
    "simulate": _GRID + _SPACE + _DATA + _TIME,
    "norms": [
        Param("in", str, None, "field file"),
        Param("s", float, 2.0, "regularity"),
        Param("p", float, 2.0, "integrability"),
        Param("index", _index, 2.0, "q (Besov) or r (Triebel-Lizorkin)"),
        Param("kind", str, "besov", "besov | tl"),
        Param("floor", float, 1e-12, "relative round-off floor for the spectrum"),
    ],
    "nonuniform": [
        Param("n_min", int, 4), Param("n_max", int, 8), Param("d", int, 1),
        *_SPACE,
        Param("dt", float, 0.02, "time step"),
        Param("t_probe", _auto_float, None, "probe time (auto: halve from 1 until linear)"),
        Param("nx", _auto_float, None, "points per axis (auto: smallest resolving grid)"),
        Param("rl_check", _bool, True, "compare c0 with the Riemann-Lebesgue limit"),
    ],
    "prop31": [
        Param("d", int, 1), Param("nx", int, 128), Param("period", float, TWO_PI),
        *_SPACE,
        *[q for q in _DATA if q.name != "n"],
        Param("t0", float, 0.2, "largest probe time"),
        Param("levels", int, 5, "number of halvings of t0, including t0"),
        Param("dt", float, 0.01, "time step cap"),
    ],
    "picard": [
        Param("d", int, 1), Param("nx", int, 2048), Param("period", float, TWO_PI),
        Param("s", float, 2.0), Param("p", float, 2.0),
        Param("init", str, "powerlaw"), Param("amplitude", float, 0.1),
        Param("decay", _auto_float, None), Param("k_max", _auto_float, 384.0),
        Param("seed", int, 1),
        Param("iters", int, 10, "number of Picard iterates"),
        Param("dt", float, 0.01), Param("tfinal", float, 0.5),
        Param("slope_min", int, 1), Param("slope_max", int, 6),
        Param("compare_n", int, 8, "iterate compared with the direct solve"),
    ],
    "contdep": [
        Param("d", int, 1), Param("nx", int, 256), Param("period", float, TWO_PI),
        *_SPACE,
        Param("init", str, "powerlaw"), Param("amplitude", float, 0.5),
        Param("decay", _auto_float, 4.0), Param("k_max", _auto_float, 60.0),
        Param("seed", int, 3),
        Param("dt", float, 0.01), Param("tfinal", float, 0.5),
    ],
    "rllimit": [
        Param("n_min", int, 4), Param("n_max", int, 8), Param("d", int, 1),
        Param("s", float, 2.0), Param("p", float, 2.0),
    ],
}
EXPERIMENTS = ("nonuniform", "prop31", "picard", "contdep", "rllimit")


# --- config handling -------------------------------------------------------

def _key(k: str) -> str:
    return k.strip().lstrip("-").replace("-", "_")


def load_config(path: str | os.PathLike) -> dict[str, str]:
    """Raw ``key -> value`` strings from a flat config file or a manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
        data = data.get("config", data)
        return {_key(k): ("none" if v is None else str(v)) for k, v in data.items()}
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        k, v = line.split("=", 1)
        out[_key(k)] = v.strip()
    return out


def _resolve(table: list[Param], cli: dict[str, Any], file_values: dict[str, str]) -> dict[str, Any]:
    known = {q.name for q in table}
    unknown = sorted(set(file_values) - known - {"threads", "out", "command", "experiment"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for q in table:
        if cli.get(q.name) is not None:
            cfg[q.name] = cli[q.name]
        elif q.name in file_values:
            try:
                cfg[q.name] = q.type(file_values[q.name])
            except ValueError as e:
                raise ConfigError(f"bad value for {q.name!r}: {file_values[q.name]!r} ({e})") from e
        else:
            cfg[q.name] = q.default
    return cfg


def _add_table(parser: argparse.ArgumentParser, table: list[Param]):
    for q in table:
        parser.add_argument(f"--{q.name.replace('_', '-')}", dest=q.name, type=q.type,
                            default=None, help=f"{q.help} [default: {q.default}]".strip())


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="flat key=value file (or a manifest.json)")
    parser.add_argument("--out", help=f"output directory [default: ${OUT_ENV}/<name> or ./ep_spectra_out/<name>]")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ep-spectra", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "norms"):
        p = sub.add_parser(name)
        _add_common(p)
        _add_table(p, TABLES[name])
    ex = sub.add_parser("experiment").add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = ex.add_parser(name)
        _add_common(p)
        _add_table(p, TABLES[name])
    return parser


# --- helpers -----------------------------------------------------------------

def _versions() -> dict[str, str]:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"ep_spectra": pkg, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _out_dir(arg: str | None, name: str) -> Path:
    if arg:
        return Path(arg)
    root = os.environ.get(OUT_ENV)
    return Path(root or "ep_spectra_out") / name


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _grid(cfg: dict) -> PeriodicGrid:
    return PeriodicGrid(cfg["d"], cfg["nx"], cfg["period"])


def _initial_data(cfg: dict, grid: PeriodicGrid | None) -> VectorField:
    init = cfg["init"]
    if init == "zero":
        return VectorField.zeros(grid)
    if init == "smooth":
        return smooth_data(grid, cfg["amplitude"])
    if init == "powerlaw":
        decay = cfg["decay"] if cfg["decay"] is not None else cfg.get("s", 2.0) + grid.dim / 2
        return power_law_data(grid, decay, cfg["amplitude"], cfg["k_max"], cfg["seed"])
    if init == "fn":
        g = counterexample_grid(cfg["n"], cfg["d"])
        return make_fn(cfg["n"], g, cfg["s"], make_bump(g, g.dim))
    path = Path(init)
    if not path.exists():
        raise ConfigError(f"--init must be zero, smooth, powerlaw, fn or an existing file; got {init!r}")
    f = read_field(path)
    if not isinstance(f, VectorField):
        f = VectorField(f.grid, f.samples[None]) if f.grid.dim == 1 else None
        if f is None:
            raise ConfigError(f"{path} holds a scalar field; a velocity field is required")
    if grid is not None and f.grid.dim != grid.dim:
        raise ConfigError(f"{path} has dim {f.grid.dim}, expected {grid.dim}")
    return f


class _Run:
    """Output directory bookkeeping shared by all subcommands."""

    def __init__(self, name: str, out: Path, argv: list[str], cfg: dict):
        self.name = name
        self.out = out
        self.argv = argv
        self.cfg = cfg
        self.outputs: list[str] = []
        self.extra: dict[str, Any] = {}
        self.started = datetime.now(timezone.utc)
        self.t0 = time.perf_counter()

    def write_text(self, fname: str, text: str):
        atomic_write_text(self.out / fname, text)
        self.outputs.append(fname)

    def write_field(self, fname: str, f):
        write_field(self.out / fname, f)
        self.outputs.append(fname)

    def write_report(self, report: ExperimentReport):
        self.write_text("report.json", report.to_json() + "\n")
        self.write_text("report.csv", report.to_csv())

    def finish(self, code: int) -> int:
        manifest = {
            "command": self.name,
            "argv": self.argv,
            "config": {k: _jsonable(v) for k, v in self.cfg.items()},
            "versions": _versions(),
            "started": self.started.isoformat(),
            "wall_time_s": time.perf_counter() - self.t0,
            "exit_code": code,
            "outputs": self.outputs + ["manifest.json"],
            **self.extra,
        }
        atomic_write_text(self.out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return code


# --- subcommands -------------------------------------------------------------

def _simulate(run: _Run) -> int:
    cfg = run.cfg
    grid = None if cfg["init"] == "fn" else _grid(cfg)
    u0 = _initial_data(cfg, grid)
    grid = u0.grid
    run.extra["grid"] = {"d": grid.dim, "nx": grid.points_per_axis, "period": grid.period}
    space = SpaceParams(cfg["s"], cfg["p"], cfg["r"], NormKind.TRIEBEL_LIZORKIN)
    solver = SolverConfig(dt=cfg["dt"], t_final=cfg["tfinal"], blowup_threshold=cfg["blowup"],
                          record_every=cfg["record_every"])
    try:
        traj = solve(u0, solver, space, build_partition(grid))
    except BlowupDetected as e:
        run.write_text("trajectory.csv", e.trajectory.to_csv())
        run.write_field("final.field", e.trajectory.final)
        report = ExperimentReport("simulate", dict(cfg))
        report.summary.update(time=e.time, grad_linf=e.norm, threshold=e.threshold)
        report.check("no_blowup", False, time=e.time, grad_linf=e.norm, threshold=e.threshold)
        run.write_report(report)
        print(f"blow-up: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    run.write_text("trajectory.csv", traj.to_csv())
    run.write_field("final.field", traj.final)
    print(f"wrote {run.out / 'trajectory.csv'} and {run.out / 'final.field'}")
    return EXIT_OK


def _norms(run: _Run) -> int:
    cfg = run.cfg
    if not cfg["in"]:
        raise ConfigError("norms needs --in <field-file>")
    kind = cfg["kind"].lower()
    if kind not in ("besov", "tl"):
        raise ConfigError(f"--kind must be besov or tl, got {cfg['kind']!r}")
    f = read_field(cfg["in"])
    part = build_partition(f.grid)
    values = {"besov": besov_norm(f, SpaceParams(cfg["s"], cfg["p"], cfg["index"], NormKind.BESOV), part)}
    # Triebel-Lizorkin needs a finite index; report it whenever it is defined
    if math.isfinite(cfg["index"]):
        values["tl"] = tl_norm(f, SpaceParams(cfg["s"], cfg["p"], cfg["index"], NormKind.TRIEBEL_LIZORKIN), part)
    elif kind == "tl":
        raise ConfigError("Triebel-Lizorkin norms need a finite --index")
    table = spectrum_csv(f, cfg["s"], cfg["p"], part, floor=cfg["floor"])
    tag = f"s={cfg['s']:g} p={cfg['p']:g} index={cfg['index']:g}"
    for name in sorted(values, key=lambda k: k != kind):
        print(f"# {name} norm ({tag}): {values[name]!r}")
    print(table, end="")
    run.write_text("spectrum.csv", table)
    run.write_text("norms.json", json.dumps({k: _jsonable(v) for k, v in values.items()}, indent=2) + "\n")
    return EXIT_OK


def _experiment(run: _Run, name: str, threads: int) -> int:
    cfg = run.cfg
    if name == "nonuniform":
        n_range = list(range(cfg["n_min"], cfg["n_max"] + 1))
        grid = counterexample_grid(cfg["n_max"], cfg["d"])
        if cfg["nx"] is not None:
            grid = PeriodicGrid(cfg["d"], int(cfg["nx"]), grid.period, n_max=cfg["n_max"])
        rl = None
        if cfg["rl_check"]:
            rl = rl_lower_bound(n_range, cfg["s"], cfg["p"], grid=grid).summary["empirical_limit"]
        report = nonuniform_experiment(n_range, cfg["s"], cfg["p"], cfg["r"], cfg["t_probe"],
                                       SolverConfig(dt=cfg["dt"], t_final=1.0), grid=grid,
                                       threads=threads, rl_limit=rl)
    elif name == "prop31":
        u0 = _initial_data(cfg, _grid(cfg))
        t_list = [cfg["t0"] / 2**k for k in range(cfg["levels"])]
        sp = SpaceParams(cfg["s"], cfg["p"], cfg["r"], NormKind.TRIEBEL_LIZORKIN)
        report = prop31_check(u0, t_list, sp, build_partition(u0.grid),
                              SolverConfig(dt=cfg["dt"], t_final=cfg["t0"]))
    elif name == "picard":
        u0 = _initial_data(cfg, _grid(cfg))
        report = picard_experiment(u0, cfg["iters"], cfg["s"], cfg["p"],
                                   SolverConfig(dt=cfg["dt"], t_final=cfg["tfinal"]),
                                   slope_range=(cfg["slope_min"], cfg["slope_max"]),
                                   compare_n=cfg["compare_n"])
    elif name == "contdep":
        u0 = _initial_data(cfg, _grid(cfg))
        part = build_partition(u0.grid)
        sp = SpaceParams(cfg["s"], cfg["p"], cfg["r"], NormKind.TRIEBEL_LIZORKIN)
        report = continuous_dependence_experiment(u0, list(range(0, part.j_max + 2)), sp, part,
                                                  SolverConfig(dt=cfg["dt"], t_final=cfg["tfinal"]))
    elif name == "rllimit":
        report = rl_lower_bound(list(range(cfg["n_min"], cfg["n_max"] + 1)), cfg["s"], cfg["p"], cfg["d"])
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown experiment {name!r}")
    run.write_report(report)
    status = "PASS" if report.passed else "FAIL"
    print(f"{name}: {status} " + json.dumps(report.summary, default=str))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with status 2
        return int(e.code or 0)
    name = args.experiment if args.command == "experiment" else args.command
    table = TABLES[name]
    try:
        file_values = load_config(args.config) if args.config else {}
        cfg = _resolve(table, vars(args), file_values)
        threads = args.threads if args.threads is not None else int(file_values.get("threads", 1))
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        spectral_core.set_fft_workers(threads)
        run = _Run(name, _out_dir(args.out, name), argv, cfg)
        run.cfg["threads"] = threads
        try:
            if name == "simulate":
                code = _simulate(run)
            elif name == "norms":
                code = _norms(run)
            else:
                code = _experiment(run, name, threads)
        except BlowupDetected as e:
            report = ExperimentReport(name, dict(cfg))
            report.summary.update(time=e.time, grad_linf=e.norm, threshold=e.threshold)
            report.check("no_blowup", False, time=e.time, grad_linf=e.norm, threshold=e.threshold)
            run.write_report(report)
            print(f"blow-up: {e}", file=sys.stderr)
            code = EXIT_BLOWUP
        return run.finish(code)
    except (ConfigError, ValueError, OSError) as e:
        print(f"ep-spectra: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
