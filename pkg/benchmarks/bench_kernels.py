"""Time each hot kernel under the numba and numpy backends, then one full solve per backend.

    python benchmarks/bench_kernels.py [--n 256] [--repeat 20]

The full-solve comparison runs in subprocesses because the backend is fixed
at import time by ``PDEACCEL_NO_JIT``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from pdeaccel import _jit, kernels

SOLVE_SNIPPET = """
import time
from pdeaccel.experiments import ExperimentConfig, run_single
cfg = ExperimentConfig('minimal_surface', mesh=[{n}])
run_single(ExperimentConfig('minimal_surface', mesh=[16]), 16, 0)  # compile / warm up
t = time.perf_counter()
r = run_single(cfg, {n}, 0)
print(r.trace.iterations, time.perf_counter() - t)
"""


def kernel_args(n, rng):
    u = rng.standard_normal((n, n))
    um = u + 1e-3 * rng.standard_normal((n, n))
    dx = 1.0 / (n - 1)
    k = np.ones((n, n))
    f = np.zeros((n, n))
    lo = u - 1.0
    hi = u + 1.0
    g = rng.standard_normal((n, n))
    return {
        "forward_gradient": (u, dx),
        "backward_divergence": (u, um, dx),
        "laplacian5": (u, dx),
        "grad_quadratic": (u, dx, k, 0.0, f),
        "grad_minsurf": (u, dx, f),
        "grad_minsurf_sym": (u, dx, f),
        "energy_quadratic": (u, dx, k, 0.0, f),
        "energy_minsurf": (u, dx, f),
        "energy_minsurf_sym": (u, dx, f),
        "kinetic": (u, um, dx, 0.01),
        "accel_update": (u, um, g, 2 * np.pi, 0.01, 1.0, lo, hi, 0.0),
        "gd_update": (u, g, 1e-5, 1.0, lo, hi),
        "residual": (u, g, lo, hi),
        "residual_max": (u, g, lo, hi),
        "dual_bisection": (u, um, 0.01, 28),
    }


def bench_kernels(n, repeat):
    rng = np.random.default_rng(0)
    args = kernel_args(n, rng)
    impls = {b: kernels.implementations(b) for b in ("numpy", "numba")}
    print(f"kernels on {n}x{n}, best of {repeat} (ms)")
    print(f"{'kernel':<22}{'numpy':>10}{'numba':>10}{'speedup':>10}")
    for name in kernels.KERNEL_NAMES:
        times = {}
        for backend, fns in impls.items():
            fn, a = fns[name], args[name]
            fn(*a)
            times[backend] = min(timeit.repeat(lambda: fn(*a), number=1, repeat=repeat)) * 1e3
        print(f"{name:<22}{times['numpy']:>10.3f}{times['numba']:>10.3f}{times['numpy'] / times['numba']:>10.1f}")


def bench_solve(n):
    print(f"\nminimal surface (phi1/50) full solve on {n}x{n}")
    for flag, label in (("1", "numpy"), ("0", "numba")):
        env = dict(os.environ, PDEACCEL_NO_JIT=flag)
        out = subprocess.run(
            [sys.executable, "-c", SOLVE_SNIPPET.format(n=n)], env=env, capture_output=True, text=True, check=True
        )
        its, secs = out.stdout.split()
        print(f"  {label:<6} {int(its):>6} iterations  {float(secs):8.3f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--solve-n", type=int, default=128)
    args = ap.parse_args()
    if not _jit.NUMBA_AVAILABLE:
        sys.exit("numba is not installed; nothing to compare")
    bench_kernels(args.n, args.repeat)
    bench_solve(args.solve_n)


if __name__ == "__main__":
    main()
