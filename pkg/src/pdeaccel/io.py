"""Plain-text field dumps, PGM previews and trace tables."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import ScalarField

TRACE_HEADER = "iter,residual,kinetic,potential,total"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(field: ScalarField, path) -> Path:
    """First line ``nx,ny,dx``, then ``ny`` rows of ``nx`` values (17 significant digits)."""
    path = Path(path)
    lines = [f"{field.nx},{field.ny},{_fmt(field.dx)}"]
    lines += [",".join(_fmt(v) for v in row) for row in field.values]
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write field CSV {path}: {exc}") from exc
    return path


def read_field_csv(path) -> ScalarField:
    path = Path(path)
    rows = path.read_text().strip().splitlines()
    nx, ny, dx = rows[0].split(",")
    nx, ny = int(nx), int(ny)
    vals = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    if vals.shape != (ny, nx):
        raise ValueError(f"{path}: header says {ny}x{nx}, body has shape {vals.shape}")
    return ScalarField(vals, float(dx))


def write_pgm(field: ScalarField, path) -> Path:
    """Binary 8-bit ``P5`` image, min-max normalized (a constant field maps to 0).

    Pixel rows follow the field rows, so the first image row is ``x2 = 0``.
    """
    path = Path(path)
    v = field.values
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        pix = np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pix = np.zeros(v.shape, dtype=np.uint8)
    header = f"P5\n{field.nx} {field.ny}\n255\n".encode("ascii")
    try:
        path.write_bytes(header + pix.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write PGM {path}: {exc}") from exc
    return path


def write_trace_csv(trace, path) -> Path:
    """One row per iterate (initial state included): ``iter,residual,kinetic,potential,total``."""
    path = Path(path)
    res, kin, pot = trace.residual_history, trace.kinetic_history, trace.potential_history
    lines = [TRACE_HEADER]
    for n in range(len(res)):
        lines.append(f"{n},{_fmt(res[n])},{_fmt(kin[n])},{_fmt(pot[n])},{_fmt(kin[n] + pot[n])}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace CSV {path}: {exc}") from exc
    return path
