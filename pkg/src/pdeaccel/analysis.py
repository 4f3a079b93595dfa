"""Diagnostics: the theoretical rate bound, decay/complexity fits, energy audit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ScalarField

# Poincare constant of the unit square in the convention used for the damping defaults.
UNIT_SQUARE_LAMBDA = math.pi**2


@dataclass(frozen=True)
class RateBoundInputs:
    a: float
    theta: float
    mu: float
    lam: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"damping a must be positive, got {self.a}")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if not self.lam > 0:
            raise ValueError(f"Poincare constant must be positive, got {self.lam}")


def rate_bound(inp: RateBoundInputs) -> float:
    """Exponential rate ``beta`` in ``|u - u*|_{H^1}^2 <= C exp(-beta t)``."""
    a, th, mu, lam = inp.a, inp.theta, inp.mu, inp.lam
    c = a + mu / a + (2.0 * lam / a) * (1.0 / th - th)
    return (a * math.sqrt(c * c + 4.0 * lam * th) - a * c) / (2.0 * math.sqrt(lam * th) + a)


def _window(n, window):
    if window is None:
        return slice(int(0.2 * n), int(math.ceil(0.8 * n)))
    if isinstance(window, slice):
        return window
    return slice(*window)


def decay_rate_fit(times, errors, window=None) -> float:
    """Negated least-squares slope of ``log(error)`` against time.

    ``window`` is a slice or ``(start, stop)`` pair; by default the first and
    last 20% of the samples are dropped.
    """
    t = np.asarray(times, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if t.shape != e.shape:
        raise ValueError("times and errors differ in length")
    sl = _window(len(t), window)
    t, e = t[sl], e[sl]
    if len(t) < 5:
        raise ValueError(f"need at least 5 samples in the fit window, got {len(t)}")
    if np.any(e <= 0):
        raise ValueError("errors must be positive inside the fit window")
    slope = np.polyfit(t, np.log(e), 1)[0]
    return float(-slope)


def complexity_fit(sizes, quantities) -> float:
    """Exponent ``p`` of the least-squares fit ``quantity ~ c * size**p`` in log-log space."""
    n = np.asarray(sizes, dtype=np.float64)
    q = np.asarray(quantities, dtype=np.float64)
    if n.shape != q.shape or len(n) < 3:
        raise ValueError("need at least 3 (size, quantity) pairs")
    if np.any(n <= 0) or np.any(q <= 0):
        raise ValueError("sizes and quantities must be positive")
    if np.ptp(n) == 0:
        raise ValueError("sizes must not all be equal")
    return float(np.polyfit(np.log(n), np.log(q), 1)[0])


def monotonicity_audit(trace, tol: float = 0.0) -> tuple[float, int | None]:
    """Largest increase of ``K + E`` between consecutive iterates.

    Returns ``(max_violation, first_iter)`` where ``first_iter`` is the first
    iterate ``n`` with ``total[n] - total[n-1] > tol``, or ``None``.
    """
    total = np.asarray(trace.total_history if hasattr(trace, "total_history") else trace, dtype=np.float64)
    if len(total) < 2:
        return 0.0, None
    jumps = np.diff(total)
    worst = float(max(jumps.max(), 0.0))
    bad = np.nonzero(jumps > tol)[0]
    return worst, (int(bad[0]) + 1 if len(bad) else None)


def homogenization_gap(u_eps: ScalarField, u_hom: ScalarField) -> float:
    if not u_eps.same_grid(u_hom):
        raise ValueError("fields live on different grids")
    return float(np.abs(u_eps.values - u_hom.values).max())
