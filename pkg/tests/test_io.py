import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdeaccel.grid import ScalarField
from pdeaccel.io import read_field_csv, write_field_csv, write_pgm, write_trace_csv
from pdeaccel.models import DIRICHLET, EnergyModel, ProblemSpec
from pdeaccel.solvers import SolverConfig, pde_accel_solve


def test_zero_field_csv(tmp_path):
    p = write_field_csv(ScalarField.zeros(3), tmp_path / "z.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "3,3,0.5"
    assert lines[1:] == ["0,0,0"] * 3


@given(arrays(np.float64, st.tuples(st.integers(3, 6), st.integers(3, 6)), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_field_round_trip_is_exact(tmp_path_factory, v):
    path = tmp_path_factory.mktemp("rt") / "f.csv"
    f = ScalarField(v, 1.0 / 7)
    g = read_field_csv(write_field_csv(f, path))
    assert g.dx == f.dx
    np.testing.assert_array_equal(g.values, f.values)


def test_read_rejects_inconsistent_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("4,3,0.5\n0,0,0\n0,0,0\n0,0,0\n")
    with pytest.raises(ValueError):
        read_field_csv(p)


def test_pgm_constant_and_ramp(tmp_path):
    raw = write_pgm(ScalarField.constant(4, 2.5), tmp_path / "c.pgm").read_bytes()
    header = b"P5\n4 4\n255\n"
    assert raw.startswith(header)
    assert raw[len(header):] == bytes(16)
    ramp = ScalarField(np.tile(np.arange(5.0), (3, 1)), 0.25)
    pix = write_pgm(ramp, tmp_path / "r.pgm").read_bytes()[len(b"P5\n5 3\n255\n"):]
    assert list(pix[:5]) == [0, 64, 128, 191, 255]


def test_io_errors_name_the_path(tmp_path):
    missing = tmp_path / "no" / "such" / "dir" / "f.csv"
    with pytest.raises(OSError, match="no/such/dir"):
        write_field_csv(ScalarField.zeros(3), missing)
    with pytest.raises(OSError, match="no/such/dir"):
        write_pgm(ScalarField.zeros(3), missing)


def test_trace_rows(tmp_path):
    n = 12
    g = ScalarField.from_function(lambda x1, x2: np.sin(2 * np.pi * x1**2), n)
    tr = pde_accel_solve(ProblemSpec(EnergyModel(DIRICHLET), g), SolverConfig())
    lines = write_trace_csv(tr, tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,residual,kinetic,potential,total"
    assert len(lines) - 1 == tr.iterations + 1
    last = lines[-1].split(",")
    assert int(last[0]) == tr.iterations
    assert float(last[4]) == pytest.approx(float(last[2]) + float(last[3]))
