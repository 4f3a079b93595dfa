"""Experiment configs, problem assembly and the run matrix behind the CLI.

Config files are line-oriented ``key = value`` documents; ``#`` starts a
comment and list values are comma separated::

    experiment = minimal_surface
    solver = accel
    mesh = 64, 128, 256
    obstacle = phi1
    scale = 50
"""
from __future__ import annotations

import csv
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import complexity_fit
from .grid import ScalarField, grid_coordinates, unit_dx
from .io import write_field_csv, write_pgm, write_trace_csv
from .models import (
    DIRICHLET,
    HETEROGENEOUS,
    LINEARIZED,
    MINIMAL_SURFACE,
    EnergyModel,
    ProblemSpec,
    checkerboard,
    contact_set,
    energy,
    obstacle_phi1,
    obstacle_phi2,
    surface_area,
    torsion_problem,
)
from .solvers import SOLVERS, IterateDiff, Residual, SolverConfig

EXPERIMENTS = ("dirichlet", "minimal_surface", "double_obstacle", "homogenization")
OBSTACLES = ("none", "phi1", "phi2", "torsion")

_DEFAULTS = {
    # obstacle, scale, cfl_safety
    "dirichlet": ("none", 1.0, 1.0),
    "minimal_surface": ("phi1", 50.0, 0.8),
    "double_obstacle": ("torsion", 1.0, 0.8),
    "homogenization": ("phi1", 50.0, 0.8),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    solver: str = "accel"
    mesh: list = field(default_factory=lambda: [64])
    obstacle: str | None = None
    scale: float | None = None
    model: str = "nonlinear"
    stencil: str = "forward"
    damping: float = 2.0 * math.pi
    wave_speed: float = 1.0
    cfl_safety: float | None = None
    stopping: str = "residual"
    tol: float | None = None
    max_iters: int = 200_000
    seed: list = field(default_factory=lambda: [0])
    cells: int | None = None
    coefficient: str = "conductivity"
    bisection_iters: int | None = None
    penalty: float | None = None
    out: str = "runs"

    def __post_init__(self):
        self.validate()

    def validate(self):
        def bad(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if self.experiment not in EXPERIMENTS:
            bad("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {self.experiment!r}")
        if self.solver not in SOLVERS:
            bad("solver", f"must be one of {', '.join(SOLVERS)}, got {self.solver!r}")
        if not self.mesh:
            bad("mesh", "at least one mesh size is required")
        for m in self.mesh:
            if m < 8:
                bad("mesh", f"mesh sizes must be >= 8, got {m}")
        if not self.seed:
            bad("seed", "at least one seed is required")
        if self.obstacle is not None and self.obstacle not in OBSTACLES:
            bad("obstacle", f"must be one of {', '.join(OBSTACLES)}, got {self.obstacle!r}")
        if self.scale is not None and not self.scale > 0:
            bad("scale", f"must be positive, got {self.scale}")
        if self.model not in ("nonlinear", "linear"):
            bad("model", f"must be 'nonlinear' or 'linear', got {self.model!r}")
        if self.stencil not in ("forward", "symmetric"):
            bad("stencil", f"must be 'forward' or 'symmetric', got {self.stencil!r}")
        if self.stencil == "symmetric":
            if self.experiment not in ("minimal_surface", "double_obstacle") or self.model != "nonlinear":
                bad("stencil", "'symmetric' applies to the nonlinear minimal surface energy only")
            if self.solver == "primal_dual":
                bad("stencil", "'symmetric' is not available with the primal_dual solver")
        if not self.damping > 0:
            bad("damping", f"must be positive, got {self.damping}")
        if not self.wave_speed > 0:
            bad("wave_speed", f"must be positive, got {self.wave_speed}")
        if self.cfl_safety is not None and not 0 < self.cfl_safety <= 1:
            bad("cfl_safety", f"must lie in (0, 1], got {self.cfl_safety}")
        if self.stopping not in ("residual", "iterate_diff"):
            bad("stopping", f"must be 'residual' or 'iterate_diff', got {self.stopping!r}")
        if self.tol is not None and not self.tol > 0:
            bad("tol", f"must be positive, got {self.tol}")
        if self.max_iters < 1:
            bad("max_iters", f"must be >= 1, got {self.max_iters}")
        if self.cells is not None and self.cells < 1:
            bad("cells", f"must be >= 1, got {self.cells}")
        if self.coefficient not in ("conductivity", "squared"):
            bad("coefficient", f"must be 'conductivity' or 'squared', got {self.coefficient!r}")
        if self.bisection_iters is not None and self.bisection_iters < 1:
            bad("bisection_iters", f"must be >= 1, got {self.bisection_iters}")
        if self.penalty is not None and not self.penalty > 0:
            bad("penalty", f"must be positive, got {self.penalty}")

    @property
    def effective_obstacle(self) -> str:
        return self.obstacle or _DEFAULTS[self.experiment][0]

    @property
    def effective_scale(self) -> float:
        return self.scale if self.scale is not None else _DEFAULTS[self.experiment][1]

    @property
    def effective_cfl_safety(self) -> float:
        return self.cfl_safety if self.cfl_safety is not None else _DEFAULTS[self.experiment][2]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_NUMBER_PI = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


def _float(text):
    m = _NUMBER_PI.match(text)
    if m:
        return float(m.group(1) or 1.0) * math.pi
    return float(text)


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _opt_int(text):
    return None if text.lower() == "none" else int(text)


_PARSERS = {
    "experiment": str,
    "solver": str,
    "mesh": _int_list,
    "obstacle": str,
    "scale": _float,
    "model": str,
    "stencil": str,
    "damping": _float,
    "wave_speed": _float,
    "cfl_safety": _float,
    "stopping": str,
    "tol": _float,
    "max_iters": int,
    "seed": _int_list,
    "cells": _opt_int,
    "coefficient": str,
    "bisection_iters": _opt_int,
    "penalty": _float,
    "out": str,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a ``key = value`` document; errors name the key and line."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: malformed value for {key!r}: {val!r}") from None
        lines[key] = lineno
    if "experiment" not in values:
        raise ConfigError("missing required key 'experiment'")
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        key = str(exc).split(":", 1)[0]
        where = f"line {lines[key]}: " if key in lines else ""
        raise ConfigError(f"{where}{exc}") from None


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# problem assembly
# ---------------------------------------------------------------------------


def dirichlet_boundary(n: int) -> ScalarField:
    """``sin(2 pi x1^2) + sin(2 pi x2^2)`` sampled on every node."""
    return ScalarField.from_function(lambda x1, x2: np.sin(2 * np.pi * x1**2) + np.sin(2 * np.pi * x2**2), n)


def checkerboard_coefficient(cfg: ExperimentConfig, n: int, seed: int) -> ScalarField:
    """Coefficient field ``A`` of the heterogeneous energy ``A^2 |grad u|^2 / 2``.

    ``coefficient = squared`` uses the {1, 9} checkerboard as ``A`` itself;
    ``conductivity`` treats it as the conductivity ``A^2``.
    """
    cells = cfg.cells or max(n // 4, 1)
    board = checkerboard(cells, seed, n)
    return board if cfg.coefficient == "squared" else board.with_values(np.sqrt(board.values))


def homogenized_coefficient(cfg: ExperimentConfig) -> float:
    return 3.0 if cfg.coefficient == "squared" else math.sqrt(3.0)


def _lower_obstacle(cfg, n):
    name = cfg.effective_obstacle
    if name == "phi1":
        return obstacle_phi1(cfg.effective_scale, n)
    if name == "phi2":
        phi = obstacle_phi2(n)
        return phi.with_values(phi.values / cfg.effective_scale)
    return None


def build_problem(cfg: ExperimentConfig, n: int, seed: int = 0, homogenized: bool = False) -> ProblemSpec:
    zero = ScalarField.zeros(n)
    exp = cfg.experiment
    if exp == "dirichlet":
        return ProblemSpec(EnergyModel(DIRICHLET), dirichlet_boundary(n), _lower_obstacle(cfg, n))
    if exp == "homogenization":
        ones = ScalarField.constant(n, 1.0)
        if homogenized:
            A = ScalarField.constant(n, homogenized_coefficient(cfg))
        else:
            A = checkerboard_coefficient(cfg, n, seed)
        return ProblemSpec(EnergyModel(HETEROGENEOUS, f=ones, A=A), zero, _lower_obstacle(cfg, n))
    kind = MINIMAL_SURFACE if cfg.model == "nonlinear" else LINEARIZED
    extra = {"stencil": cfg.stencil} if kind == MINIMAL_SURFACE else {}
    if cfg.effective_obstacle == "torsion":
        lower, upper, force = torsion_problem(n)
        return ProblemSpec(EnergyModel(kind, f=force, **extra), zero, lower, upper)
    return ProblemSpec(EnergyModel(kind, **extra), zero, _lower_obstacle(cfg, n))


def solver_config(cfg: ExperimentConfig, seed: int = 0) -> SolverConfig:
    if cfg.stopping == "residual":
        rule = Residual(cfg.tol if cfg.tol is not None else 1.0)
    else:
        rule = IterateDiff(cfg.tol if cfg.tol is not None else 0.01)
    return SolverConfig(
        damping=cfg.damping,
        wave_speed=cfg.wave_speed,
        cfl_safety=cfg.effective_cfl_safety,
        penalty=cfg.penalty,
        stopping=rule,
        max_iters=cfg.max_iters,
        bisection_iters=cfg.bisection_iters,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

SUMMARY_FIELDS = ("mesh", "seed", "iterations", "converged", "wall_seconds", "energy", "surface_area", "residual")


@dataclass
class RunResult:
    mesh: int
    seed: int
    problem: ProblemSpec
    trace: object

    def row(self) -> dict:
        t = self.trace
        kind = self.problem.model.kind
        area = surface_area(t.final) if kind in (MINIMAL_SURFACE, LINEARIZED) else float("nan")
        return {
            "mesh": self.mesh,
            "seed": self.seed,
            "iterations": t.iterations,
            "converged": bool(t.converged),
            "wall_seconds": t.wall_time,
            "energy": energy(self.problem.model, t.final),
            "surface_area": area,
            "residual": float(t.residual_history[-1]),
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list
    complexity: dict | None = None

    @property
    def rows(self) -> list:
        return [r.row() for r in self.runs]

    @property
    def all_converged(self) -> bool:
        return all(r.trace.converged for r in self.runs)

    def iterations(self, seed=None) -> dict:
        seed = self.runs[0].seed if seed is None else seed
        return {r.mesh: r.trace.iterations for r in self.runs if r.seed == seed}


def run_single(cfg: ExperimentConfig, mesh: int, seed: int) -> RunResult:
    problem = build_problem(cfg, mesh, seed)
    trace = SOLVERS[cfg.solver](problem, solver_config(cfg, seed))
    return RunResult(mesh, seed, problem, trace)


def _complexity(runs) -> dict | None:
    meshes = sorted({r.mesh for r in runs})
    if len(meshes) < 3:
        return None
    its = [np.mean([r.trace.iterations for r in runs if r.mesh == m]) for m in meshes]
    wall = [np.mean([r.trace.wall_time for r in runs if r.mesh == m]) for m in meshes]
    sizes = [m * m for m in meshes]
    out = {"iterations": complexity_fit(sizes, np.maximum(its, 1))}
    if min(wall) > 0:
        out["wall_seconds"] = complexity_fit(sizes, wall)
    return out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, write: bool = True, artifacts: bool = True) -> ExperimentResult:
    """Solve every ``(mesh, seed)`` pair; optionally write artifacts under ``cfg.out``.

    Solves may run on ``jobs`` threads; results are sorted by ``(mesh, seed)``
    before anything is written.
    """
    pairs = [(m, s) for m in cfg.mesh for s in cfg.seed]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(lambda ms: run_single(cfg, *ms), pairs))
    else:
        runs = [run_single(cfg, m, s) for m, s in pairs]
    runs.sort(key=lambda r: (r.mesh, r.seed))
    result = ExperimentResult(cfg, runs, _complexity(runs))
    if write:
        write_outputs(result, artifacts=artifacts)
    return result


def _stem(cfg, run):
    return f"{cfg.experiment}_{cfg.solver}_m{run.mesh}_s{run.seed}"


def write_outputs(result: ExperimentResult, artifacts: bool = True) -> Path:
    cfg = result.config
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in result.rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in row.items()})
    if result.complexity:
        lines = ["quantity,exponent"] + [f"{k},{v:.6f}" for k, v in result.complexity.items()]
        (out / "complexity.csv").write_text("\n".join(lines) + "\n")
    if not artifacts:
        return out
    for run in result.runs:
        stem = _stem(cfg, run)
        u = run.trace.final
        write_field_csv(u, out / f"{stem}_field.csv")
        write_pgm(u, out / f"{stem}_field.pgm")
        write_trace_csv(run.trace, out / f"{stem}_trace.csv")
        if run.problem.lower is not None:
            write_field_csv(contact_set(u, run.problem.lower), out / f"{stem}_contact_lower.csv")
        if run.problem.upper is not None:
            write_field_csv(contact_set(u, run.problem.upper), out / f"{stem}_contact_upper.csv")
    return out


def format_rows(result: ExperimentResult) -> str:
    cfg = result.config
    head = f"{cfg.experiment} / {cfg.solver}"
    lines = [head, f"{'mesh':>6} {'seed':>5} {'iters':>8} {'conv':>5} {'wall[s]':>9} {'energy':>12} {'area':>9} {'residual':>10}"]
    for r in result.rows:
        lines.append(
            f"{r['mesh']:>6} {r['seed']:>5} {r['iterations']:>8} {str(r['converged']):>5} "
            f"{r['wall_seconds']:>9.3f} {r['energy']:>12.6g} {r['surface_area']:>9.4f} {r['residual']:>10.3e}"
        )
    if result.complexity:
        lines.append("complexity: " + ", ".join(f"{k} ~ N^{v:.2f}" for k, v in result.complexity.items()))
    return "\n".join(lines)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


# reference values for the desk-scale table reproductions, keyed by mesh size
PAPER_TABLES = {
    "table1": [
        ("dirichlet", "accel", {}, {64: 399, 128: 869, 256: 1898}),
        ("dirichlet", "primal_dual", {}, {64: 592, 128: 1384, 256: 3027}),
        ("dirichlet", "gradient_descent", {}, {64: 8404}),
    ],
    "ms_phi1": [
        ("minimal_surface", "accel", {}, {64: 360, 128: 823, 256: 1863}),
        ("minimal_surface", "primal_dual", {}, {64: 370, 128: 870, 256: 2070}),
    ],
    "ms_phi2": [
        ("minimal_surface", "accel", {"obstacle": "phi2", "scale": 1.0}, {64: 300, 128: 704, 256: 1620}),
    ],
    "double_obstacle": [
        ("double_obstacle", "accel", {"model": "linear"}, {64: 378, 128: 835, 256: 1807}),
        ("double_obstacle", "accel", {"model": "nonlinear"}, {64: 382, 128: 862, 256: 1937}),
    ],
    "homogenization": [
        ("homogenization", "accel", {"damping": 2 * math.pi}, {64: 1665, 128: 3924, 256: 8919}),
        ("homogenization", "accel", {"damping": 6 * math.pi}, {64: 572, 128: 1340, 256: 3087}),
        ("homogenization", "accel", {"damping": 9 * math.pi}, {64: 569, 128: 1469, 256: 3588}),
    ],
}


def table_configs(name: str, meshes, seeds=(0,), out="runs"):
    """Experiment configs (with paper iteration counts) for one of :data:`PAPER_TABLES`."""
    if name not in PAPER_TABLES:
        raise ConfigError(f"unknown table {name!r}; choose from {', '.join(PAPER_TABLES)}")
    for exp, solver, extra, paper in PAPER_TABLES[name]:
        ms = [m for m in meshes if m in paper]
        if not ms:
            continue
        tag = "_".join(f"{k}-{v:.4g}" if isinstance(v, float) else f"{k}-{v}" for k, v in extra.items())
        sub = Path(out) / name / "_".join(filter(None, [solver, tag]))
        cfg = ExperimentConfig(experiment=exp, solver=solver, mesh=ms, seed=list(seeds), out=str(sub), **extra)
        yield cfg, paper
