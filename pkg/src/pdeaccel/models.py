"""Discrete energies, their gradients, and the obstacle/coefficient catalog.

Energies are cell sums: ``dx**2`` times the integrand summed over the
``(nx-1)*(ny-1)`` nodes that own a full forward stencil.  With this
convention the flat unit square has area exactly 1 and
:func:`energy_gradient` is exactly the derivative of :func:`energy` along
perturbations that vanish on the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import ScalarField, boundary_mask, grid_coordinates, unit_dx

DIRICHLET = "dirichlet_quadratic"
REACTION = "linear_reaction"
MINIMAL_SURFACE = "nonlinear_minimal_surface"
LINEARIZED = "linearized_minimal_surface"
HETEROGENEOUS = "heterogeneous_quadratic"

KINDS = (DIRICHLET, REACTION, MINIMAL_SURFACE, LINEARIZED, HETEROGENEOUS)


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """One of the supported integrands.

    ``b`` scales the gradient term of the quadratic models, ``c`` is the
    reaction coefficient (``LINEAR_REACTION`` only), ``f`` an optional
    forcing entering as ``-f u`` and ``A`` the scalar coefficient field of
    ``HETEROGENEOUS`` (integrand ``A^2 |grad u|^2 / 2``).

    ``stencil`` applies to ``MINIMAL_SURFACE`` only: ``"forward"`` evaluates
    the area integrand on the forward difference owned by each cell;
    ``"symmetric"`` averages it over the four one-sided corner stencils of
    the cell, which makes the discrete energy invariant under reflections of
    the grid.
    """

    kind: str
    b: float = 1.0
    c: float = 0.0
    f: ScalarField | None = None
    A: ScalarField | None = None
    stencil: str = "forward"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown energy model {self.kind!r}; expected one of {KINDS}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if self.c < 0:
            raise ValueError(f"c must be nonnegative, got {self.c}")
        if self.c != 0 and self.kind != REACTION:
            raise ValueError("reaction coefficient c is only used by linear_reaction")
        if self.kind == HETEROGENEOUS:
            if self.A is None:
                raise ValueError("heterogeneous_quadratic needs a coefficient field A")
            if not np.all(self.A.values > 0):
                raise ValueError("coefficient field A must be positive")
        elif self.A is not None:
            raise ValueError(f"{self.kind} does not take a coefficient field")
        if self.stencil not in ("forward", "symmetric"):
            raise ValueError(f"stencil must be 'forward' or 'symmetric', got {self.stencil!r}")
        if self.stencil == "symmetric" and self.kind != MINIMAL_SURFACE:
            raise ValueError("the symmetric stencil is only implemented for the minimal surface energy")

    @property
    def is_quadratic(self) -> bool:
        return self.kind != MINIMAL_SURFACE

    def stiffness(self) -> float:
        """Upper bound on the Hessian of the gradient integrand; enters the CFL bound."""
        if self.kind in (DIRICHLET, REACTION):
            return self.b
        if self.kind == HETEROGENEOUS:
            return float(np.max(self.A.values) ** 2)
        return 1.0

    def arrays(self, shape):
        """``(k, react, f)`` arrays in the layout expected by the kernels."""
        f = np.zeros(shape) if self.f is None else self.f.values
        if self.kind == HETEROGENEOUS:
            k = self.A.values**2
        elif self.kind in (DIRICHLET, REACTION):
            k = np.full(shape, self.b)
        else:
            k = np.ones(shape)
        react = self.b * self.c if self.kind == REACTION else 0.0
        return k, react, f

    def check_grid(self, u: ScalarField):
        for name in ("f", "A"):
            fld = getattr(self, name)
            if fld is not None and not fld.same_grid(u):
                raise ValueError(f"model field {name} has shape {fld.shape}, u has {u.shape}")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Energy plus Dirichlet data and optional lower/upper obstacles.

    ``boundary`` is a full field; only its boundary nodes are data.  Interior
    values are used as the initial guess of unconstrained solves.
    """

    model: EnergyModel
    boundary: ScalarField
    lower: ScalarField | None = None
    upper: ScalarField | None = None

    def __post_init__(self):
        g = self.boundary
        self.model.check_grid(g)
        bnd = boundary_mask(g.shape)
        for name in ("lower", "upper"):
            obs = getattr(self, name)
            if obs is not None and not obs.same_grid(g):
                raise ValueError(f"{name} obstacle grid does not match boundary data")
        if self.lower is not None and self.upper is not None:
            if np.any(self.lower.values > self.upper.values):
                raise ValueError("lower obstacle exceeds upper obstacle somewhere")
        if self.lower is not None and np.any(self.lower.values[bnd] > g.values[bnd]):
            raise ValueError("lower obstacle exceeds boundary data on the boundary")
        if self.upper is not None and np.any(self.upper.values[bnd] < g.values[bnd]):
            raise ValueError("upper obstacle is below boundary data on the boundary")

    @property
    def dx(self) -> float:
        return self.boundary.dx

    @property
    def shape(self):
        return self.boundary.shape

    def has_obstacle(self) -> bool:
        return self.lower is not None or self.upper is not None

    def bound_arrays(self):
        lo = np.full(self.shape, -np.inf) if self.lower is None else self.lower.values
        hi = np.full(self.shape, np.inf) if self.upper is None else self.upper.values
        return lo, hi

    def obstacle_scale(self) -> float:
        """``max(|lower|_inf, |upper|_inf)``, 0 without obstacles."""
        s = 0.0
        for obs in (self.lower, self.upper):
            if obs is not None:
                s = max(s, float(np.abs(obs.values).max()))
        return s


def energy(model: EnergyModel, u: ScalarField) -> float:
    model.check_grid(u)
    if model.kind == MINIMAL_SURFACE:
        f = np.zeros(u.shape) if model.f is None else model.f.values
        kern = kernels.energy_minsurf_sym if model.stencil == "symmetric" else kernels.energy_minsurf
        return float(kern(u.values, u.dx, f))
    k, react, f = model.arrays(u.shape)
    return float(kernels.energy_quadratic(u.values, u.dx, k, react, f))


def gradient_array(model: EnergyModel, u: np.ndarray, dx: float, arrays=None) -> np.ndarray:
    """Raw-array form of :func:`energy_gradient`; ``arrays`` caches ``model.arrays``."""
    k, react, f = arrays if arrays is not None else model.arrays(u.shape)
    if model.kind == MINIMAL_SURFACE:
        if model.stencil == "symmetric":
            return kernels.grad_minsurf_sym(u, dx, f)
        return kernels.grad_minsurf(u, dx, f)
    return kernels.grad_quadratic(u, dx, k, react, f)


def energy_gradient(model: EnergyModel, u: ScalarField) -> ScalarField:
    """Variational gradient on interior nodes (0 on the boundary).

    ``dx**2 * sum(energy_gradient(u) * w)`` is the derivative of
    :func:`energy` at ``u`` in direction ``w`` when ``w`` vanishes on the
    boundary.
    """
    model.check_grid(u)
    return u.with_values(gradient_array(model, u.values, u.dx))


def surface_area(u: ScalarField) -> float:
    """``dx**2`` times the sum of ``sqrt(1 + |D+ u|^2)`` over the forward-difference cells."""
    return energy(EnergyModel(MINIMAL_SURFACE), u)


def coons_extension(g: ScalarField) -> ScalarField:
    """Transfinite bilinear interpolation of the boundary values of ``g``."""
    v = g.values
    ny, nx = v.shape
    s = np.linspace(0.0, 1.0, nx)[None, :]
    t = np.linspace(0.0, 1.0, ny)[:, None]
    left, right = v[:, :1], v[:, -1:]
    bottom, top = v[:1, :], v[-1:, :]
    corners = (
        (1 - s) * (1 - t) * v[0, 0] + s * (1 - t) * v[0, -1] + (1 - s) * t * v[-1, 0] + s * t * v[-1, -1]
    )
    out = (1 - s) * left + s * right + (1 - t) * bottom + t * top - corners
    bnd = boundary_mask(v.shape)
    out[bnd] = v[bnd]
    return g.with_values(out)


# ---------------------------------------------------------------------------
# obstacle / forcing catalog (unit square, n nodes per side)
# ---------------------------------------------------------------------------


def obstacle_phi1(scale: float, n: int) -> ScalarField:
    """Diamond (height 5), disc (4.5) and a horizontal segment (4.5), divided by ``scale``.

    The segment ``x2 = 0.57, 0.075 < x1 < 0.13`` has zero area, so it is
    drawn on the node row closest to ``x2 = 0.57``.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    x1, x2 = grid_coordinates(n)
    phi = np.zeros((n, n))
    phi[(x1 - 0.6) ** 2 + (x2 - 0.25) ** 2 < 0.001] = 4.5
    row = int(np.argmin(np.abs(x2[:, 0] - 0.57)))
    seg = (x1[row] > 0.075) & (x1[row] < 0.13)
    phi[row, seg] = 4.5
    phi[np.abs(x1 - 0.6) + np.abs(x2 - 0.6) < 0.04] = 5.0
    return ScalarField(phi / scale, unit_dx(n))


def obstacle_phi2(n: int) -> ScalarField:
    """Two spherical-cap bumps centred at (0.55, 0.5) and (0.1, 0.5)."""
    x1, _ = grid_coordinates(n)
    # offset from x2 = 0.5 built from centred indices so mirrored rows agree bitwise
    d2 = ((np.arange(n) - 0.5 * (n - 1)) * unit_dx(n))[:, None]
    big = 1.0 - ((x1 - 0.55) ** 2 + d2**2) / 0.09
    small = 1.0 - ((x1 - 0.1) ** 2 + d2**2) / 0.0025
    return ScalarField(np.sqrt(np.maximum(big, 0.0)) + np.sqrt(np.maximum(small, 0.0)), unit_dx(n))


def sawtooth(x1):
    """Piecewise-linear helper of the torsion forcing: peaks of 1 at 1/6, 1/2, 5/6."""
    x1 = np.asarray(x1, dtype=np.float64)
    return np.select(
        [x1 <= 1 / 6, x1 <= 1 / 3, x1 <= 1 / 2, x1 <= 2 / 3, x1 <= 5 / 6],
        [6 * x1, 2 * (1 - 3 * x1), 6 * (x1 - 1 / 3), 2 * (1 - 3 * (x1 - 1 / 3)), 6 * (x1 - 2 / 3)],
        2 * (1 - 3 * (x1 - 2 / 3)),
    )


def torsion_forcing(x1, x2):
    """Unscaled elasto-plastic torsion load."""
    band = (np.abs(x1 - x2) <= 0.1) & (x1 <= 0.3)
    g = sawtooth(x1)
    return np.where(band, 300.0, np.where(x1 <= 1 - x2, -70.0 * np.exp(x2) * g, 15.0 * np.exp(x2) * g))


def torsion_problem(n: int) -> tuple[ScalarField, ScalarField, ScalarField]:
    """``(lower, upper, forcing)`` of the torsion benchmark, all divided by 10."""
    x1, x2 = grid_coordinates(n)
    dist = np.minimum(np.minimum(x1, 1 - x1), np.minimum(x2, 1 - x2))
    dx = unit_dx(n)
    return (
        ScalarField(-dist / 10.0, dx),
        ScalarField(np.full((n, n), 0.02), dx),
        ScalarField(torsion_forcing(x1, x2) / 10.0, dx),
    )


def checkerboard(cells_per_side: int, seed: int, n: int) -> ScalarField:
    """Random {1, 9} checkerboard, one cell per ``n // cells_per_side`` nodes.

    Cell values come from ``numpy.random.default_rng(seed)`` (PCG64): one
    uniform draw per cell in row-major cell order, value 1 if the draw is
    below 0.5 and 9 otherwise.
    """
    if cells_per_side < 1:
        raise ValueError("cells_per_side must be at least 1")
    if n % cells_per_side:
        raise ValueError(f"{n} nodes per side is not a multiple of {cells_per_side} cells")
    draws = np.random.default_rng(seed).random(cells_per_side * cells_per_side)
    cells = np.where(draws < 0.5, 1.0, 9.0).reshape(cells_per_side, cells_per_side)
    per = n // cells_per_side
    return ScalarField(np.repeat(np.repeat(cells, per, axis=0), per, axis=1), unit_dx(n))


def contact_set(u: ScalarField, obstacle: ScalarField, tol: float = 1e-8) -> ScalarField:
    """Indicator of ``|u - obstacle| <= tol``."""
    return u.with_values((np.abs(u.values - obstacle.values) <= tol).astype(np.float64))
