import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from pdeaccel import kernels
from pdeaccel.grid import ScalarField, boundary_mask
from pdeaccel.models import (
    DIRICHLET,
    HETEROGENEOUS,
    LINEARIZED,
    MINIMAL_SURFACE,
    EnergyModel,
    ProblemSpec,
    obstacle_phi1,
    obstacle_phi2,
    torsion_problem,
)
from pdeaccel.solvers import (
    IterateDiff,
    Residual,
    SolverConfig,
    cfl_dt,
    default_bisection_iters,
    dual_bisection,
    gradient_descent_solve,
    initial_state,
    is_converged,
    optimal_damping,
    pde_accel_solve,
    pde_accel_step,
    primal_dual_params,
    primal_dual_solve,
    relax_boundary,
    residual_field,
    residual_threshold,
)


def _ms_problem(n=24, scale=50.0, **kw):
    return ProblemSpec(EnergyModel(MINIMAL_SURFACE, **kw), ScalarField.zeros(n), obstacle_phi1(scale, n))


# -- parameters ----------------------------------------------------------------


def test_optimal_damping_examples():
    assert optimal_damping(math.pi**2, 0.0, 1.0) == pytest.approx(2 * math.pi)
    assert optimal_damping(0.0, 1.0, 1.0) == pytest.approx(2.0)
    assert optimal_damping(math.pi**2, 0.0, 4.0) == pytest.approx(4 * math.pi)
    with pytest.raises(ValueError, match="undamped"):
        optimal_damping(0.0, 0.0, 1.0)


def test_cfl_examples():
    assert cfl_dt("wave", 0.1, 2.0, 1.0) == pytest.approx(0.05)
    assert cfl_dt(MINIMAL_SURFACE, 1 / 64, 1.0, 0.8) == pytest.approx(0.8 / (64 * math.sqrt(2)))
    assert cfl_dt("heat", 0.1, 1.0, 1.0) == pytest.approx(0.0025)
    with pytest.raises(ValueError):
        cfl_dt("wave", 0.1, 1.0, 1.5)


def test_explicit_dt_above_cfl_is_rejected():
    p = _ms_problem(12)
    with pytest.raises(ValueError, match="CFL"):
        pde_accel_solve(p, SolverConfig(dt=1.0))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(damping=0.0)
    with pytest.raises(ValueError):
        SolverConfig(cfl_safety=0.0)
    with pytest.raises(ValueError):
        SolverConfig(penalty=-1.0)


def test_primal_dual_parameters():
    dx = 1 / 63
    r1, r2 = primal_dual_params(dx)
    assert r1 / r2 == pytest.approx(4 * math.pi**2)
    assert r1 * r2 == pytest.approx(dx * dx / 6)
    with pytest.raises(ValueError, match="dx"):
        primal_dual_solve(_ms_problem(12), SolverConfig(r1=1.0, r2=1.0))


def test_default_bisection_iters():
    # 2^-k * dx^2-level accuracy: ~20-30 steps at desk resolutions
    assert default_bisection_iters(1 / 63 * 0.1, 1 / 63) == 22  # ceil(log2(63**3 * 10))
    assert 25 <= default_bisection_iters(1 / 255 * 0.1, 1 / 255) <= 30


# -- residual and stopping ------------------------------------------------------


def test_residual_threshold_variants():
    p = _ms_problem(11)
    assert residual_threshold(p, Residual()) == pytest.approx(0.1 * 0.1)
    free = ProblemSpec(EnergyModel(DIRICHLET), ScalarField.zeros(11))
    assert residual_threshold(free, Residual(2.0)) == pytest.approx(2 * 0.01)
    assert residual_threshold(free, IterateDiff(0.01)) == pytest.approx(1e-4)


def test_residual_sign_structure(rng):
    n = 10
    phi = ScalarField(np.abs(rng.standard_normal((n, n))), 1 / 9)
    phi.values[boundary_mask((n, n))] = 0.0
    p = ProblemSpec(EnergyModel(LINEARIZED), ScalarField.zeros(n), phi)
    u = phi
    r = residual_field(p, u).values
    g = -kernels.implementations("numpy")["grad_quadratic"](u.values, u.dx, np.ones((n, n)), 0.0, np.zeros((n, n)))
    expect = np.maximum(g, phi.values - u.values)
    inner = ~boundary_mask((n, n))
    np.testing.assert_allclose(r[inner], expect[inner], atol=1e-12)
    assert np.all(r[~inner] == 0)


def test_double_obstacle_residual_at_upper_contact():
    n = 7
    lo = ScalarField.constant(n, -1.0)
    lo.values[boundary_mask((n, n))] = 0.0
    hi = ScalarField.constant(n, 0.3)
    hi.values[boundary_mask((n, n))] = 0.0
    p = ProblemSpec(EnergyModel(LINEARIZED), ScalarField.zeros(n), lo, hi)
    u = hi.values.copy()
    r = residual_field(p, ScalarField(u, 1 / 6)).values
    # pressing up against psi: -grad E > 0 there, so min(-grad E, psi - u) = 0
    assert np.all(r[3, 3] == 0.0)


def test_is_converged_iterate_diff():
    p = ProblemSpec(EnergyModel(DIRICHLET), ScalarField.zeros(5))
    u = ScalarField.zeros(5)
    with pytest.raises(ValueError):
        is_converged(p, u, IterateDiff())
    assert is_converged(p, u, IterateDiff(), u)


# -- single steps ---------------------------------------------------------------


def test_step_fixed_point():
    n = 9
    g = ScalarField.from_function(lambda x1, x2: 1 + x1 - 2 * x2, n)
    p = ProblemSpec(EnergyModel(DIRICHLET), g)
    out = pde_accel_step(g, g, p, SolverConfig())
    np.testing.assert_allclose(out.values, g.values, atol=1e-14)


def test_step_projection_saturates():
    n = 9
    phi = ScalarField.constant(n, 10.0)
    phi.values[boundary_mask((n, n))] = 0.0
    p = ProblemSpec(EnergyModel(DIRICHLET), ScalarField.zeros(n), phi)
    z = ScalarField.zeros(n)
    out = pde_accel_step(z, z, p, SolverConfig()).values
    assert np.all(out[1:-1, 1:-1] == 10.0)
    assert np.all(out[boundary_mask((n, n))] == 0.0)


@given(st.integers(0, 2**31 - 1), st.booleans())
def test_step_feasibility_is_exact(seed, double):
    rng = np.random.default_rng(seed)
    n = 10
    dx = 1 / 9
    lo = rng.standard_normal((n, n)) * 0.5 - 0.5
    hi = lo + np.abs(rng.standard_normal((n, n)))
    m = boundary_mask((n, n))
    lo[m], hi[m] = -1.0, 1.0
    p = ProblemSpec(
        EnergyModel(MINIMAL_SURFACE),
        ScalarField.zeros(n),
        ScalarField(lo, dx),
        ScalarField(hi, dx) if double else None,
    )
    u = ScalarField(rng.standard_normal((n, n)), dx)
    u.values[m] = 0.0
    um = ScalarField(u.values + 0.1 * rng.standard_normal((n, n)), dx)
    out = pde_accel_step(u, um, p, SolverConfig()).values
    assert np.all(out >= lo)
    if double:
        assert np.all(out <= hi)


def test_penalty_step_matches_projection(rng):
    n = 16
    p = _ms_problem(n, scale=1.0)
    u = ScalarField(np.abs(rng.standard_normal((n, n))) * 0.05, 1 / 15)
    u.values[boundary_mask((n, n))] = 0.0
    proj = pde_accel_step(u, u, p, SolverConfig()).values
    pen = pde_accel_step(u, u, p, SolverConfig(penalty=1e10)).values
    assert np.abs(proj - pen).max() <= 1e-6 * np.abs(proj).max()


# -- full solves -----------------------------------------------------------------


def test_zero_problem_converges_immediately():
    p = ProblemSpec(EnergyModel(DIRICHLET), ScalarField.zeros(16))
    for solve in (pde_accel_solve, gradient_descent_solve, primal_dual_solve):
        tr = solve(p, SolverConfig())
        assert tr.converged and tr.iterations == 0
        assert len(tr.residual_history) == 1


def test_fixed_point_start_returns_at_once():
    n = 20
    g = ScalarField.from_function(lambda x1, x2: x1 * x2 + 0.3 * x1, n)
    p = ProblemSpec(EnergyModel(DIRICHLET), g)
    assert pde_accel_solve(p, SolverConfig()).iterations == 0
    assert gradient_descent_solve(p, SolverConfig()).iterations == 0


def test_non_convergence_is_reported_not_raised():
    tr = pde_accel_solve(_ms_problem(24), SolverConfig(max_iters=5))
    assert not tr.converged and tr.iterations == 5
    assert len(tr.kinetic_history) == 6


def test_accel_solution_satisfies_the_variational_inequality():
    p = _ms_problem(32)
    tr = pde_accel_solve(p, SolverConfig())
    assert tr.converged
    assert is_converged(p, tr.final)
    assert np.all(tr.final.values >= p.lower.values)
    assert tr.dt == pytest.approx(0.8 / 31 / math.sqrt(2))


def test_double_obstacle_feasible():
    n = 32
    lo, hi, v = torsion_problem(n)
    p = ProblemSpec(EnergyModel(MINIMAL_SURFACE, f=v), ScalarField.zeros(n), lo, hi)
    tr = pde_accel_solve(p, SolverConfig())
    assert tr.converged
    u = tr.final.values
    assert np.all(u >= lo.values) and np.all(u <= hi.values)
    assert np.any(u == hi.values) and np.any((u == lo.values) & ~boundary_mask(u.shape))


def test_penalty_solve_matches_projection_solve():
    p = _ms_problem(32, scale=10.0)
    a = pde_accel_solve(p, SolverConfig())
    b = pde_accel_solve(p, SolverConfig(penalty=1e10))
    assert abs(a.iterations - b.iterations) <= 1
    assert np.abs(a.final.values - b.final.values).max() <= 1e-6 * np.abs(a.final.values).max()


def test_gradient_descent_is_much_slower():
    n = 48
    g = ScalarField.from_function(lambda x1, x2: np.sin(2 * np.pi * x1**2) + np.sin(2 * np.pi * x2**2), n)
    p = ProblemSpec(EnergyModel(DIRICHLET), g)
    acc = pde_accel_solve(p, SolverConfig(cfl_safety=1.0))
    gd = gradient_descent_solve(p, SolverConfig(cfl_safety=1.0))
    assert acc.converged and gd.converged
    assert gd.iterations > 10 * acc.iterations


def test_symmetric_stencil_preserves_mirror_symmetry():
    n = 40
    p = ProblemSpec(EnergyModel(MINIMAL_SURFACE, stencil="symmetric"), ScalarField.zeros(n), obstacle_phi2(n))
    u = pde_accel_solve(p, SolverConfig()).final.values
    assert np.abs(u - u[::-1, :]).max() <= 1e-8


def test_forward_stencil_is_only_approximately_symmetric():
    n = 40
    p = ProblemSpec(EnergyModel(MINIMAL_SURFACE), ScalarField.zeros(n), obstacle_phi2(n))
    u = pde_accel_solve(p, SolverConfig()).final.values
    # one-sided differences tilt the surface near the narrow bump
    assert 1e-3 < np.abs(u - u[::-1, :]).max() < 0.2


def test_boundary_relaxation_reaches_the_data():
    n = 20
    g = ScalarField.from_function(lambda x1, x2: np.sin(np.pi * x1) + x2, n)
    p = ProblemSpec(EnergyModel(DIRICHLET), g)
    tr = pde_accel_solve(p, SolverConfig(boundary_relax=True, initial="zero", cfl_safety=1.0))
    assert tr.converged
    m = boundary_mask(g.shape)
    assert np.abs(tr.final.values[m] - g.values[m]).max() <= residual_threshold(p, Residual())


def test_heterogeneous_solve_uses_coefficient_cfl():
    n = 16
    A = ScalarField.constant(n, 3.0)
    p = ProblemSpec(EnergyModel(HETEROGENEOUS, A=A, f=ScalarField.constant(n, 1.0)), ScalarField.zeros(n))
    tr = pde_accel_solve(p, SolverConfig(damping=6 * math.pi))
    assert tr.converged
    assert tr.dt == pytest.approx(0.8 * (1 / 15) / math.sqrt(2 * 9.0))


def test_initial_state_is_feasible():
    p = _ms_problem(16, scale=1.0)
    u = initial_state(p, SolverConfig())
    assert np.all(u >= p.lower.values)


# -- relax_boundary -----------------------------------------------------------------


def test_relax_boundary_examples():
    n = 6
    g = ScalarField.constant(n, 1.0)
    assert np.array_equal(relax_boundary(g, g, 0.3).values, g.values)
    out = relax_boundary(ScalarField.zeros(n), g, 0.5).values
    m = boundary_mask((n, n))
    assert np.all(out[m] == 0.5) and np.all(out[~m] == 0.0)
    u = ScalarField.zeros(n)
    for k in range(1, 8):
        u = relax_boundary(u, g, 0.25)
        np.testing.assert_allclose(1.0 - u.values[m], 0.75**k, rtol=1e-12)
    with pytest.raises(ValueError):
        relax_boundary(u, g, 0.0)


# -- dual bisection -------------------------------------------------------------------


def _exact_alpha(N, r1):
    # square-root form, independent of the polynomial used by the solver
    f = lambda a: a + r1 * a / math.sqrt(1.0 - a * a) - N
    return brentq(f, 0.0, N if N < 1 else 1.0 - 2.0**-53, xtol=1e-16)


def test_dual_bisection_zero_input():
    assert np.array_equal(dual_bisection(np.zeros(2), np.zeros(2), 0.1, 30), np.zeros(2))


def test_dual_bisection_reference_root():
    p = dual_bisection(np.array([0.5, 0.0]), np.zeros(2), 0.1, 50)
    a = p[0]
    assert p[1] == 0.0
    assert abs(a + 0.1 * a / math.sqrt(1 - a * a) - 0.5) <= 1e-12
    assert a == pytest.approx(_exact_alpha(0.5, 0.1), abs=1e-13)


def test_dual_bisection_large_input_stays_inside_the_ball():
    p = dual_bisection(np.array([600.0, 800.0]), np.zeros(2), 0.1, 40)
    a = float(np.hypot(*p))
    assert 0.99 < a < 1.0
    np.testing.assert_allclose(p / a, [0.6, 0.8], rtol=1e-12)
    ex = _exact_alpha(1000.0, 0.1)
    assert abs(a - ex) <= 1.0 / 2**41


@given(
    st.floats(1e-3, 50.0),
    st.floats(0.0, 2 * math.pi),
    st.floats(1e-3, 2.0),
    st.integers(1, 40),
)
def test_dual_bisection_error_bound(N, theta, r1, k):
    q = np.array([N * math.cos(theta), N * math.sin(theta)])
    p = dual_bisection(q, np.zeros(2), r1, k)
    a = float(np.hypot(*p))
    assert a < 1.0
    assert abs(a - _exact_alpha(float(np.hypot(*q)), r1)) <= min(1.0, N) / 2 ** (k + 1) + 1e-12


def test_dual_bisection_combines_inputs():
    p_n = np.array([0.2, -0.1])
    grad = np.array([1.0, 3.0])
    r1 = 0.05
    q = p_n + r1 * grad
    out = dual_bisection(p_n, grad, r1, 45)
    N = float(np.hypot(*q))
    np.testing.assert_allclose(out, _exact_alpha(N, r1) * q / N, atol=1e-12)


def test_primal_dual_dual_feasibility_every_iteration():
    tr = primal_dual_solve(_ms_problem(24, scale=5.0), SolverConfig())
    assert tr.converged
    assert np.all(tr.dual_norm_history < 1.0)
    assert tr.dual.max_magnitude() < 1.0


def test_primal_dual_rejects_unsupported_models():
    n = 10
    p = ProblemSpec(EnergyModel(DIRICHLET, b=2.0), ScalarField.zeros(n))
    with pytest.raises(ValueError):
        primal_dual_solve(p, SolverConfig())
    sym = ProblemSpec(EnergyModel(MINIMAL_SURFACE, stencil="symmetric"), ScalarField.zeros(n))
    with pytest.raises(ValueError):
        primal_dual_solve(sym, SolverConfig())


def test_primal_dual_flat_start():
    n = 12
    lo = ScalarField.constant(n, -0.5)
    lo.values[boundary_mask((n, n))] = 0.0
    p = ProblemSpec(EnergyModel(MINIMAL_SURFACE), ScalarField.zeros(n), lo)
    tr = primal_dual_solve(p, SolverConfig())
    assert tr.converged and tr.iterations == 0
