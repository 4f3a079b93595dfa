"""Array-level finite-difference kernels.

Every kernel exists twice: a numba loop version (``nb_*``) and a vectorized
numpy version (``np_*``).  The unprefixed names are bound to one of them at
import time according to :data:`pdeaccel._jit.USE_NUMBA`.

Conventions shared by all kernels:

* arrays are ``(ny, nx)`` float64, row index = y;
* forward differences are zero at the last row/column;
* "interior" means ``1 <= i <= ny-2`` and ``1 <= j <= nx-2``; kernels that
  return a gradient or residual leave the boundary at 0;
* missing obstacles are passed as ``-inf`` / ``+inf`` arrays and a missing
  forcing as zeros, so the jitted signatures stay fixed.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def np_forward_gradient(u, dx):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = (u[:, 1:] - u[:, :-1]) / dx
    gy[:-1, :] = (u[1:, :] - u[:-1, :]) / dx
    return gx, gy


def np_backward_divergence(px, py, dx):
    d = px.copy()
    d[:, 1:] -= px[:, :-1]
    d += py
    d[1:, :] -= py[:-1, :]
    return d / dx


def np_laplacian5(u, dx):
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (
        u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
    ) / (dx * dx)
    return out


def _zero_boundary(a):
    a[0, :] = 0.0
    a[-1, :] = 0.0
    a[:, 0] = 0.0
    a[:, -1] = 0.0
    return a


def np_grad_quadratic(u, dx, k, react, f):
    gx, gy = np_forward_gradient(u, dx)
    g = -np_backward_divergence(k * gx, k * gy, dx) + react * u - f
    return _zero_boundary(g)


def np_grad_minsurf(u, dx, f):
    gx, gy = np_forward_gradient(u, dx)
    s = np.sqrt(1.0 + gx * gx + gy * gy)
    g = -np_backward_divergence(gx / s, gy / s, dx) - f
    return _zero_boundary(g)


def np_energy_quadratic(u, dx, k, react, f):
    gx, gy = np_forward_gradient(u, dx)
    c = (slice(0, -1), slice(0, -1))
    dens = 0.5 * k[c] * (gx[c] ** 2 + gy[c] ** 2) + 0.5 * react * u[c] ** 2 - f[c] * u[c]
    return float(dens.sum() * dx * dx)


def np_energy_minsurf(u, dx, f):
    gx, gy = np_forward_gradient(u, dx)
    c = (slice(0, -1), slice(0, -1))
    dens = np.sqrt(1.0 + gx[c] ** 2 + gy[c] ** 2) - f[c] * u[c]
    return float(dens.sum() * dx * dx)


def _cell_edges(u, dx):
    # per cell: x-differences on its lower/upper edge, y-differences on its left/right edge
    xb = (u[:-1, 1:] - u[:-1, :-1]) / dx
    xt = (u[1:, 1:] - u[1:, :-1]) / dx
    yl = (u[1:, :-1] - u[:-1, :-1]) / dx
    yr = (u[1:, 1:] - u[:-1, 1:]) / dx
    return xb, xt, yl, yr


def np_energy_minsurf_sym(u, dx, f):
    xb, xt, yl, yr = _cell_edges(u, dx)
    dens = 0.0
    for gx in (xb, xt):
        for gy in (yl, yr):
            dens = dens + np.sqrt(1.0 + gx * gx + gy * gy)
    c = (slice(0, -1), slice(0, -1))
    return float((0.25 * dens - f[c] * u[c]).sum() * dx * dx)


def np_grad_minsurf_sym(u, dx, f):
    xb, xt, yl, yr = _cell_edges(u, dx)
    n0 = u.shape[0] - 1
    g = np.zeros_like(u)
    for xe, gx in ((0, xb), (1, xt)):
        for ye, gy in ((0, yl), (1, yr)):
            s = 0.25 / np.sqrt(1.0 + gx * gx + gy * gy)
            fx, fy = gx * s, gy * s
            g[xe : n0 + xe, 1:] += fx
            g[xe : n0 + xe, :-1] -= fx
            g[1:, ye : ye + u.shape[1] - 1] += fy
            g[:-1, ye : ye + u.shape[1] - 1] -= fy
    g = g / dx - f
    return _zero_boundary(g)


def np_kinetic(u, um, dx, dt):
    v = (u - um) / dt
    return float(0.5 * dx * dx * np.sum(v * v))


def np_accel_update(u, um, grad, a, dt, bw, lower, upper, mu):
    num = (2.0 + a * dt) * u - um - dt * dt * bw * grad
    den = 1.0 + a * dt
    v = num / den
    if mu > 0.0:
        pen = den + mu * dt * dt
        below = v < lower
        above = v > upper
        v = np.where(below, (num + mu * dt * dt * lower) / pen, v)
        v = np.where(above, (num + mu * dt * dt * upper) / pen, v)
    else:
        v = np.maximum(np.minimum(v, upper), lower)
    out = u.copy()
    out[1:-1, 1:-1] = v[1:-1, 1:-1]
    return out


def np_gd_update(u, grad, dt, bw, lower, upper):
    v = np.maximum(np.minimum(u - dt * bw * grad, upper), lower)
    out = u.copy()
    out[1:-1, 1:-1] = v[1:-1, 1:-1]
    return out


def np_residual(u, grad, lower, upper):
    r = np.maximum(-grad, lower - u)
    r = np.where(u >= upper, np.minimum(-grad, upper - u), r)
    r = np.where((u <= lower) & (u >= upper), 0.0, r)
    return _zero_boundary(r)


def np_residual_max(u, grad, lower, upper):
    return float(np.abs(np_residual(u, grad, lower, upper)).max())


def np_dual_bisection(qx, qy, r1, k):
    n = np.hypot(qx, qy)
    lo = np.zeros_like(n)
    hi = np.minimum(1.0, n)
    r1sq = r1 * r1
    for _ in range(k):
        m = 0.5 * (lo + hi)
        g = r1sq * m * m - (1.0 - m * m) * (m - n) ** 2
        neg = g < 0.0
        lo = np.where(neg, m, lo)
        hi = np.where(neg, hi, m)
    alpha = 0.5 * (lo + hi)
    safe = np.where(n > 0.0, n, 1.0)
    scale = np.where(n > 0.0, alpha / safe, 0.0)
    return qx * scale, qy * scale


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------


@njit
def nb_forward_gradient(u, dx):
    ny, nx = u.shape
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    for i in range(ny):
        for j in range(nx):
            if j < nx - 1:
                gx[i, j] = (u[i, j + 1] - u[i, j]) / dx
            if i < ny - 1:
                gy[i, j] = (u[i + 1, j] - u[i, j]) / dx
    return gx, gy


@njit
def nb_backward_divergence(px, py, dx):
    ny, nx = px.shape
    d = np.empty_like(px)
    for i in range(ny):
        for j in range(nx):
            s = px[i, j] + py[i, j]
            if j > 0:
                s -= px[i, j - 1]
            if i > 0:
                s -= py[i - 1, j]
            d[i, j] = s / dx
    return d


@njit
def nb_laplacian5(u, dx):
    ny, nx = u.shape
    out = np.zeros_like(u)
    h2 = dx * dx
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            out[i, j] = (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1] - 4.0 * u[i, j]) / h2
    return out


@njit
def nb_grad_quadratic(u, dx, k, react, f):
    ny, nx = u.shape
    g = np.zeros_like(u)
    h2 = dx * dx
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            uc = u[i, j]
            fe = k[i, j] * (u[i, j + 1] - uc)
            fw = k[i, j - 1] * (uc - u[i, j - 1])
            fn = k[i, j] * (u[i + 1, j] - uc)
            fs = k[i - 1, j] * (uc - u[i - 1, j])
            g[i, j] = -((fe - fw) + (fn - fs)) / h2 + react * uc - f[i, j]
    return g


@njit
def nb_grad_minsurf(u, dx, f):
    ny, nx = u.shape
    px = np.zeros_like(u)
    py = np.zeros_like(u)
    for i in range(ny - 1):
        for j in range(nx - 1):
            gx = (u[i, j + 1] - u[i, j]) / dx
            gy = (u[i + 1, j] - u[i, j]) / dx
            s = math.sqrt(1.0 + gx * gx + gy * gy)
            px[i, j] = gx / s
            py[i, j] = gy / s
    g = np.zeros_like(u)
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            g[i, j] = -((px[i, j] - px[i, j - 1]) + (py[i, j] - py[i - 1, j])) / dx - f[i, j]
    return g


@njit
def nb_energy_quadratic(u, dx, k, react, f):
    ny, nx = u.shape
    s = 0.0
    for i in range(ny - 1):
        for j in range(nx - 1):
            gx = (u[i, j + 1] - u[i, j]) / dx
            gy = (u[i + 1, j] - u[i, j]) / dx
            uc = u[i, j]
            s += 0.5 * k[i, j] * (gx * gx + gy * gy) + 0.5 * react * uc * uc - f[i, j] * uc
    return s * dx * dx


@njit
def nb_energy_minsurf(u, dx, f):
    ny, nx = u.shape
    s = 0.0
    for i in range(ny - 1):
        for j in range(nx - 1):
            gx = (u[i, j + 1] - u[i, j]) / dx
            gy = (u[i + 1, j] - u[i, j]) / dx
            s += math.sqrt(1.0 + gx * gx + gy * gy) - f[i, j] * u[i, j]
    return s * dx * dx


@njit
def _nb_corner_sum(u, dx, i, j):
    xb = (u[i, j + 1] - u[i, j]) / dx
    xt = (u[i + 1, j + 1] - u[i + 1, j]) / dx
    yl = (u[i + 1, j] - u[i, j]) / dx
    yr = (u[i + 1, j + 1] - u[i, j + 1]) / dx
    return (
        math.sqrt(1.0 + xb * xb + yl * yl)
        + math.sqrt(1.0 + xb * xb + yr * yr)
        + math.sqrt(1.0 + xt * xt + yl * yl)
        + math.sqrt(1.0 + xt * xt + yr * yr)
    )


@njit
def nb_energy_minsurf_sym(u, dx, f):
    ny, nx = u.shape
    s = 0.0
    for i in range(ny - 1):
        for j in range(nx - 1):
            s += 0.25 * _nb_corner_sum(u, dx, i, j) - f[i, j] * u[i, j]
    return s * dx * dx


@njit
def nb_grad_minsurf_sym(u, dx, f):
    ny, nx = u.shape
    g = np.zeros_like(u)
    for i in range(ny - 1):
        for j in range(nx - 1):
            xb = (u[i, j + 1] - u[i, j]) / dx
            xt = (u[i + 1, j + 1] - u[i + 1, j]) / dx
            yl = (u[i + 1, j] - u[i, j]) / dx
            yr = (u[i + 1, j + 1] - u[i, j + 1]) / dx
            for xe in range(2):
                gx = xt if xe else xb
                for ye in range(2):
                    gy = yr if ye else yl
                    s = 0.25 / math.sqrt(1.0 + gx * gx + gy * gy)
                    fx = gx * s
                    fy = gy * s
                    g[i + xe, j + 1] += fx
                    g[i + xe, j] -= fx
                    g[i + 1, j + ye] += fy
                    g[i, j + ye] -= fy
    for i in range(ny):
        for j in range(nx):
            if i == 0 or j == 0 or i == ny - 1 or j == nx - 1:
                g[i, j] = 0.0
            else:
                g[i, j] = g[i, j] / dx - f[i, j]
    return g


@njit
def nb_kinetic(u, um, dx, dt):
    ny, nx = u.shape
    s = 0.0
    for i in range(ny):
        for j in range(nx):
            v = (u[i, j] - um[i, j]) / dt
            s += v * v
    return 0.5 * dx * dx * s


@njit
def nb_accel_update(u, um, grad, a, dt, bw, lower, upper, mu):
    ny, nx = u.shape
    out = u.copy()
    den = 1.0 + a * dt
    mdt2 = mu * dt * dt
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            num = (2.0 + a * dt) * u[i, j] - um[i, j] - dt * dt * bw * grad[i, j]
            v = num / den
            lo = lower[i, j]
            hi = upper[i, j]
            if mu > 0.0:
                if v < lo:
                    v = (num + mdt2 * lo) / (den + mdt2)
                elif v > hi:
                    v = (num + mdt2 * hi) / (den + mdt2)
            else:
                if v > hi:
                    v = hi
                if v < lo:
                    v = lo
            out[i, j] = v
    return out


@njit
def nb_gd_update(u, grad, dt, bw, lower, upper):
    ny, nx = u.shape
    out = u.copy()
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            v = u[i, j] - dt * bw * grad[i, j]
            if v > upper[i, j]:
                v = upper[i, j]
            if v < lower[i, j]:
                v = lower[i, j]
            out[i, j] = v
    return out


@njit
def _nb_residual_at(uc, gc, lo, hi):
    if uc <= lo and uc >= hi:
        return 0.0
    if uc >= hi:
        return min(-gc, hi - uc)
    return max(-gc, lo - uc)


@njit
def nb_residual(u, grad, lower, upper):
    ny, nx = u.shape
    r = np.zeros_like(u)
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            r[i, j] = _nb_residual_at(u[i, j], grad[i, j], lower[i, j], upper[i, j])
    return r


@njit
def nb_residual_max(u, grad, lower, upper):
    ny, nx = u.shape
    m = 0.0
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            r = abs(_nb_residual_at(u[i, j], grad[i, j], lower[i, j], upper[i, j]))
            if r > m:
                m = r
    return m


@njit
def bisect_alpha(n, r1, k):
    """k-step bisection for the root of r1^2 a^2 - (1-a^2)(a-n)^2 on [0, min(1, n)]."""
    lo = 0.0
    hi = min(1.0, n)
    r1sq = r1 * r1
    for _ in range(k):
        m = 0.5 * (lo + hi)
        if r1sq * m * m - (1.0 - m * m) * (m - n) * (m - n) < 0.0:
            lo = m
        else:
            hi = m
    return 0.5 * (lo + hi)


@njit
def nb_dual_bisection(qx, qy, r1, k):
    # Bisection step outermost so independent nodes of a row vectorize;
    # bracket midpoints match bisect_alpha.
    ny, nx = qx.shape
    px = np.zeros_like(qx)
    py = np.zeros_like(qy)
    r1sq = r1 * r1
    n = np.empty(nx)
    lo = np.empty(nx)
    w = np.empty(nx)
    for i in range(ny):
        for j in range(nx):
            n[j] = math.sqrt(qx[i, j] * qx[i, j] + qy[i, j] * qy[i, j])
            lo[j] = 0.0
            w[j] = min(1.0, n[j])
        for _ in range(k):
            for j in range(nx):
                half = 0.5 * w[j]
                m = lo[j] + half
                d = m - n[j]
                if r1sq * m * m - (1.0 - m * m) * d * d < 0.0:
                    lo[j] = m
                w[j] = half
        for j in range(nx):
            if n[j] > 0.0:
                s = (lo[j] + 0.5 * w[j]) / n[j]
                px[i, j] = qx[i, j] * s
                py[i, j] = qy[i, j] * s
    return px, py


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

KERNEL_NAMES = (
    "forward_gradient",
    "backward_divergence",
    "laplacian5",
    "grad_quadratic",
    "grad_minsurf",
    "energy_quadratic",
    "energy_minsurf",
    "grad_minsurf_sym",
    "energy_minsurf_sym",
    "kinetic",
    "accel_update",
    "gd_update",
    "residual",
    "residual_max",
    "dual_bisection",
)

BACKEND = "numba" if USE_NUMBA else "numpy"


def implementations(backend):
    """Return ``{name: function}`` for ``backend`` in {"numba", "numpy"}."""
    prefix = {"numba": "nb_", "numpy": "np_"}[backend]
    g = globals()
    return {name: g[prefix + name] for name in KERNEL_NAMES}


globals().update(implementations(BACKEND))
