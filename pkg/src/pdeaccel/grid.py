"""Node-centred uniform grids on the unit square and their difference operators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values on an ``ny x nx`` node grid with uniform spacing ``dx``.

    ``values[i, j]`` lives at ``(x1, x2) = (j*dx, i*dx)``.
    """

    values: np.ndarray
    dx: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"field values must be 2-D, got shape {v.shape}")
        if v.shape[0] < 3 or v.shape[1] < 3:
            raise ValueError(f"field needs at least 3 nodes per axis, got {v.shape}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dx", float(self.dx))

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def zeros(cls, n: int) -> "ScalarField":
        """Zero field on the unit square with ``n`` nodes per side."""
        return cls(np.zeros((n, n)), unit_dx(n))

    @classmethod
    def constant(cls, n: int, value: float) -> "ScalarField":
        return cls(np.full((n, n), float(value)), unit_dx(n))

    @classmethod
    def from_function(cls, fn, n: int) -> "ScalarField":
        """Sample ``fn(x1, x2)`` (vectorized) at the nodes of the unit square."""
        x1, x2 = grid_coordinates(n)
        return cls(np.broadcast_to(fn(x1, x2), (n, n)).astype(np.float64), unit_dx(n))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(values, self.dx)

    def same_grid(self, other: "ScalarField") -> bool:
        return self.shape == other.shape and self.dx == other.dx

    def boundary_mask(self) -> np.ndarray:
        return boundary_mask(self.shape)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    px: ScalarField
    py: ScalarField

    def __post_init__(self):
        if not self.px.same_grid(self.py):
            raise ValueError("vector components must share nx, ny and dx")

    @property
    def dx(self) -> float:
        return self.px.dx

    @property
    def shape(self) -> tuple[int, int]:
        return self.px.shape

    def magnitude(self) -> ScalarField:
        return self.px.with_values(np.hypot(self.px.values, self.py.values))

    def max_magnitude(self) -> float:
        return float(np.hypot(self.px.values, self.py.values).max())


def _vals(x):
    return x.values if isinstance(x, ScalarField) else x


def unit_dx(n: int) -> float:
    return 1.0 / (n - 1)


def grid_coordinates(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Node coordinate arrays ``(x1, x2)`` of shape ``(n, n)`` on ``[0, 1]^2``."""
    x = np.arange(n) * unit_dx(n)
    x1, x2 = np.meshgrid(x, x)
    return x1, x2


def boundary_mask(shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
    return m


def forward_gradient(u: ScalarField) -> VectorField:
    gx, gy = kernels.forward_gradient(u.values, u.dx)
    return VectorField(u.with_values(gx), u.with_values(gy))


def backward_divergence(p: VectorField) -> ScalarField:
    """Backward-difference divergence, the negative adjoint of :func:`forward_gradient`."""
    return p.px.with_values(kernels.backward_divergence(p.px.values, p.py.values, p.dx))


def five_point_laplacian(u: ScalarField) -> ScalarField:
    """Standard 5-point Laplacian on interior nodes, 0 on the boundary."""
    return u.with_values(kernels.laplacian5(u.values, u.dx))


def linf_norm(u: ScalarField) -> float:
    return float(np.abs(u.values).max())


def weighted_l2_norm(u: ScalarField) -> float:
    return float(u.dx * np.sqrt(np.sum(u.values**2)))
