"""PDE acceleration, primal-dual and gradient-descent solvers for (obstacle) variational problems."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import ScalarField, VectorField, boundary_mask
from .models import (
    DIRICHLET,
    LINEARIZED,
    MINIMAL_SURFACE,
    ProblemSpec,
    coons_extension,
    energy,
    gradient_array,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Residual:
    """Stop when the variational-inequality residual is below ``tol_factor * dx * |obstacle|_inf``.

    Without obstacles (or with identically zero ones) the threshold is
    ``tol_factor * dx**2``.
    """

    tol_factor: float = 1.0


@dataclass(frozen=True)
class IterateDiff:
    """Stop when ``|u^{n+1} - u^n|_inf <= c * dx**2``."""

    c: float = 0.01


@dataclass
class SolverConfig:
    damping: float = TWO_PI
    wave_speed: float = 1.0
    dt: float | None = None
    cfl_safety: float = 0.8
    penalty: float | None = None
    stopping: Residual | IterateDiff = field(default_factory=Residual)
    max_iters: int = 200_000
    r1: float | None = None
    r2: float | None = None
    bisection_iters: int | None = None
    seed: int = 0
    initial: str = "auto"
    boundary_relax: bool = False
    record_energy: bool = True

    def __post_init__(self):
        if not self.damping > 0:
            raise ValueError(f"damping must be positive, got {self.damping}")
        if not self.wave_speed > 0:
            raise ValueError(f"wave_speed must be positive, got {self.wave_speed}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.penalty is not None and not self.penalty > 0:
            raise ValueError(f"penalty must be positive, got {self.penalty}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        for name in ("r1", "r2"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.bisection_iters is not None and self.bisection_iters < 1:
            raise ValueError("bisection_iters must be at least 1")
        if self.initial not in ("auto", "zero"):
            raise ValueError(f"initial must be 'auto' or 'zero', got {self.initial!r}")


@dataclass
class SolveTrace:
    """Per-iterate histories (index 0 is the initial state) and the final iterate."""

    iterations: int
    converged: bool
    residual_history: np.ndarray
    kinetic_history: np.ndarray
    potential_history: np.ndarray
    wall_time: float
    final: ScalarField
    solver: str = ""
    dt: float = float("nan")
    dual: VectorField | None = None
    dual_norm_history: np.ndarray | None = None

    @property
    def total_history(self) -> np.ndarray:
        return self.kinetic_history + self.potential_history


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


def optimal_damping(lambda1: float, c: float, b: float) -> float:
    """Critical damping ``2 sqrt(b (lambda1 + c))`` of the slowest mode."""
    if lambda1 < 0 or c < 0 or not b > 0:
        raise ValueError("need lambda1 >= 0, c >= 0 and b > 0")
    if lambda1 + c == 0:
        raise ValueError("undamped modes, method does not converge (lambda1 + c = 0)")
    return 2.0 * math.sqrt(b * (lambda1 + c))


def cfl_dt(model_kind: str, dx: float, b: float, safety: float) -> float:
    """Explicit time step: ``safety*dx**2/(4b)`` for ``"heat"``, else ``safety*dx/sqrt(2b)``."""
    if not (dx > 0 and b > 0 and 0 < safety <= 1):
        raise ValueError("need dx > 0, b > 0 and 0 < safety <= 1")
    if model_kind == "heat":
        return safety * dx * dx / (4.0 * b)
    return safety * dx / math.sqrt(2.0 * b)


def _time_step(problem: ProblemSpec, cfg: SolverConfig, kind: str) -> float:
    b = cfg.wave_speed * problem.model.stiffness()
    limit = cfl_dt(kind, problem.dx, b, 1.0)
    if cfg.dt is None:
        return cfg.cfl_safety * limit
    if cfg.dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={cfg.dt:g} violates the CFL bound {limit:g} ({kind})")
    return cfg.dt


def primal_dual_params(dx: float) -> tuple[float, float]:
    """``(r1, r2)`` with ``r1/r2 = 4 pi^2`` and ``r1 r2 = dx^2/6``."""
    return TWO_PI * dx / math.sqrt(6.0), dx / (TWO_PI * math.sqrt(6.0))


def default_bisection_iters(threshold: float, dx: float) -> int:
    """Bisections needed to resolve the dual step to ``threshold * dx**2``."""
    k = math.ceil(math.log2(1.0 / (threshold * dx * dx)))
    return min(max(k, 1), 60)


# ---------------------------------------------------------------------------
# residuals and stopping
# ---------------------------------------------------------------------------


def residual_threshold(problem: ProblemSpec, rule: Residual | IterateDiff) -> float:
    dx = problem.dx
    if isinstance(rule, IterateDiff):
        return rule.c * dx * dx
    scale = problem.obstacle_scale()
    return rule.tol_factor * (dx * scale if scale > 0 else dx * dx)


def residual_field(problem: ProblemSpec, u: ScalarField) -> ScalarField:
    """``max(-grad E, lower - u)`` on interior nodes (``min(-grad E, upper - u)`` at upper contact)."""
    lo, hi = problem.bound_arrays()
    g = gradient_array(problem.model, u.values, u.dx)
    return u.with_values(kernels.residual(u.values, g, lo, hi))


def is_converged(
    problem: ProblemSpec,
    u: ScalarField,
    rule: Residual | IterateDiff = Residual(),
    u_prev: ScalarField | None = None,
) -> bool:
    thr = residual_threshold(problem, rule)
    if isinstance(rule, IterateDiff):
        if u_prev is None:
            raise ValueError("IterateDiff needs the previous iterate")
        return float(np.abs(u.values - u_prev.values).max()) <= thr
    return float(np.abs(residual_field(problem, u).values).max()) <= thr


def relax_boundary(u: ScalarField, g: ScalarField, dt: float) -> ScalarField:
    """One explicit Euler step of ``u_t = g - u`` on boundary nodes only."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = u.values.copy()
    m = boundary_mask(v.shape)
    v[m] += dt * (g.values[m] - v[m])
    return u.with_values(v)


# ---------------------------------------------------------------------------
# shared iteration driver
# ---------------------------------------------------------------------------


def initial_state(problem: ProblemSpec, cfg: SolverConfig) -> np.ndarray:
    """Starting iterate.

    Unconstrained problems start from the boundary field as given; obstacle
    problems from the bilinear extension of the boundary data pushed into
    ``[lower, upper]``.  ``cfg.initial == "zero"`` starts from 0 everywhere.
    """
    g = problem.boundary.values
    if cfg.initial == "zero":
        return np.zeros_like(g)
    if not problem.has_obstacle():
        return g.copy()
    lo, hi = problem.bound_arrays()
    u = np.minimum(np.maximum(coons_extension(problem.boundary).values, lo), hi)
    m = boundary_mask(u.shape)
    u[m] = g[m]
    return u


class _Driver:
    """Bookkeeping common to all solvers: histories, stopping rule, timing."""

    def __init__(self, problem: ProblemSpec, cfg: SolverConfig, dt_kinetic: float):
        self.problem = problem
        self.cfg = cfg
        self.dx = problem.dx
        self.dt_k = dt_kinetic
        self.lo, self.hi = problem.bound_arrays()
        self.arrays = problem.model.arrays(problem.shape)
        self.g = problem.boundary.values
        self.bnd = boundary_mask(problem.shape)
        self.thr = residual_threshold(problem, cfg.stopping)
        self.res, self.kin, self.pot = [], [], []
        self.last_diff = math.inf

    def gradient(self, u):
        return gradient_array(self.problem.model, u, self.dx, self.arrays)

    def record(self, u, um, grad) -> bool:
        r = kernels.residual_max(u, grad, self.lo, self.hi)
        if self.cfg.boundary_relax:
            r = max(r, float(np.abs(u[self.bnd] - self.g[self.bnd]).max()))
        self.res.append(r)
        if self.cfg.record_energy:
            self.kin.append(kernels.kinetic(u, um, self.dx, self.dt_k))
            self.pot.append(self.cfg.wave_speed * energy(self.problem.model, ScalarField(u, self.dx)))
        else:
            self.kin.append(math.nan)
            self.pot.append(math.nan)
        if isinstance(self.cfg.stopping, IterateDiff):
            return self.last_diff <= self.thr
        return r <= self.thr

    def pin(self, v, u):
        if self.cfg.boundary_relax:
            v[self.bnd] = u[self.bnd] + self.dt_k * (self.g[self.bnd] - u[self.bnd])
        else:
            v[self.bnd] = self.g[self.bnd]
        return v

    def advance(self, v, u):
        self.last_diff = float(np.abs(v - u).max())

    def trace(self, n, converged, u, t0, solver, **extra):
        return SolveTrace(
            iterations=n,
            converged=converged,
            residual_history=np.array(self.res),
            kinetic_history=np.array(self.kin),
            potential_history=np.array(self.pot),
            wall_time=time.perf_counter() - t0,
            final=ScalarField(u, self.dx),
            solver=solver,
            dt=self.dt_k,
            **extra,
        )


# ---------------------------------------------------------------------------
# PDE acceleration
# ---------------------------------------------------------------------------


def _accel_kernel_args(problem, cfg, dt):
    lo, hi = problem.bound_arrays()
    mu = 0.0 if cfg.penalty is None else float(cfg.penalty)
    return cfg.damping, dt, cfg.wave_speed, lo, hi, mu


def pde_accel_step(u_n: ScalarField, u_nm1: ScalarField, problem: ProblemSpec, cfg: SolverConfig) -> ScalarField:
    """One explicit damped-wave step followed by projection onto the obstacles.

    With ``cfg.penalty`` set the obstacle is enforced by the implicit
    quadratic penalty instead of the projection.
    """
    dt = _time_step(problem, cfg, "wave")
    if not (u_n.same_grid(problem.boundary) and u_nm1.same_grid(problem.boundary)):
        raise ValueError("iterates do not match the problem grid")
    grad = gradient_array(problem.model, u_n.values, u_n.dx)
    v = kernels.accel_update(u_n.values, u_nm1.values, grad, *_accel_kernel_args(problem, cfg, dt))
    m = boundary_mask(v.shape)
    v[m] = problem.boundary.values[m]
    return u_n.with_values(v)


def pde_accel_solve(problem: ProblemSpec, cfg: SolverConfig) -> SolveTrace:
    """Iterate :func:`pde_accel_step` from zero initial velocity until the stopping rule holds."""
    dt = _time_step(problem, cfg, "wave")
    drv = _Driver(problem, cfg, dt)
    args = _accel_kernel_args(problem, cfg, dt)
    t0 = time.perf_counter()
    u = initial_state(problem, cfg)
    um = u.copy()
    n = 0
    while True:
        grad = drv.gradient(u)
        if drv.record(u, um, grad):
            return drv.trace(n, True, u, t0, "accel")
        if n == cfg.max_iters:
            return drv.trace(n, False, u, t0, "accel")
        v = drv.pin(kernels.accel_update(u, um, grad, *args), u)
        drv.advance(v, u)
        um, u = u, v
        n += 1


def gradient_descent_solve(problem: ProblemSpec, cfg: SolverConfig) -> SolveTrace:
    """Explicit (projected) Euler steps of the gradient flow at the heat-equation CFL limit."""
    dt = _time_step(problem, cfg, "heat")
    drv = _Driver(problem, cfg, dt)
    lo, hi = drv.lo, drv.hi
    t0 = time.perf_counter()
    u = initial_state(problem, cfg)
    um = u.copy()
    n = 0
    while True:
        grad = drv.gradient(u)
        if drv.record(u, um, grad):
            return drv.trace(n, True, u, t0, "gradient_descent")
        if n == cfg.max_iters:
            return drv.trace(n, False, u, t0, "gradient_descent")
        v = drv.pin(kernels.gd_update(u, grad, dt, cfg.wave_speed, lo, hi), u)
        drv.advance(v, u)
        um, u = u, v
        n += 1


# ---------------------------------------------------------------------------
# primal-dual
# ---------------------------------------------------------------------------


def dual_bisection(p_n, grad_ubar, r1: float, k: int) -> np.ndarray:
    """Pointwise dual step of the minimal-surface primal-dual method.

    Returns ``alpha * q`` where ``q`` is the unit vector along
    ``p_n + r1 * grad_ubar`` and ``alpha`` is the ``k``-step bisection
    estimate of the root of ``alpha + r1 alpha / sqrt(1 - alpha^2) = N``,
    bisected through the square-root-free polynomial form.
    """
    if not r1 > 0 or k < 1:
        raise ValueError("need r1 > 0 and k >= 1")
    q = np.asarray(p_n, dtype=np.float64) + r1 * np.asarray(grad_ubar, dtype=np.float64)
    px, py = kernels.dual_bisection(q[0:1].reshape(1, 1), q[1:2].reshape(1, 1), float(r1), int(k))
    return np.array([px[0, 0], py[0, 0]])


def _check_pd_model(problem):
    m = problem.model
    if m.kind == MINIMAL_SURFACE:
        if m.stencil != "forward":
            raise ValueError("primal-dual pairs the dual field with the forward stencil only")
        return True
    if m.kind == LINEARIZED or (m.kind == DIRICHLET and m.b == 1.0):
        return False
    raise ValueError(f"primal-dual supports the (linearized) minimal surface energy, not {m.kind}")


def primal_dual_solve(problem: ProblemSpec, cfg: SolverConfig) -> SolveTrace:
    """Primal-dual iteration with over-relaxation.

    The dual step is the bisection solve for the minimal-surface energy and
    the closed-form proximal step ``(p + r1 grad u_bar) / (1 + r1)`` for the
    quadratic one.  Iterates are projected onto the obstacles and the
    boundary is re-pinned every step.
    """
    nonlinear = _check_pd_model(problem)
    dx = problem.dx
    r1, r2 = primal_dual_params(dx)
    r1 = cfg.r1 if cfg.r1 is not None else r1
    r2 = cfg.r2 if cfg.r2 is not None else r2
    if r1 * r2 > dx * dx / 6.0 * (1 + 1e-12):
        raise ValueError(f"r1*r2 = {r1 * r2:g} exceeds dx^2/6 = {dx * dx / 6:g}")
    drv = _Driver(problem, cfg, r2)
    k = cfg.bisection_iters or default_bisection_iters(drv.thr, dx)
    lo, hi = drv.lo, drv.hi
    f = drv.arrays[2]
    interior = ~drv.bnd

    t0 = time.perf_counter()
    u = initial_state(problem, cfg)
    um = u.copy()
    ubar = u.copy()
    px = np.zeros_like(u)
    py = np.zeros_like(u)
    pnorm = [0.0]
    n = 0
    while True:
        grad = drv.gradient(u)
        done = drv.record(u, um, grad)
        if done or n == cfg.max_iters:
            dual = VectorField(ScalarField(px, dx), ScalarField(py, dx))
            return drv.trace(n, done, u, t0, "primal_dual", dual=dual, dual_norm_history=np.array(pnorm))
        gx, gy = kernels.forward_gradient(ubar, dx)
        qx = px + r1 * gx
        qy = py + r1 * gy
        if nonlinear:
            px, py = kernels.dual_bisection(qx, qy, r1, k)
        else:
            px, py = qx / (1.0 + r1), qy / (1.0 + r1)
        pnorm.append(float(np.sqrt(px * px + py * py).max()))
        v = u + r2 * (kernels.backward_divergence(px, py, dx) + f)
        v[interior] = np.maximum(np.minimum(v[interior], hi[interior]), lo[interior])
        v = drv.pin(v, u)
        drv.advance(v, u)
        ubar = 2.0 * v - u
        um, u = u, v
        n += 1


SOLVERS = {
    "accel": pde_accel_solve,
    "primal_dual": primal_dual_solve,
    "gradient_descent": gradient_descent_solve,
}
