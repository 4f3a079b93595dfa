"""Damped-wave ("PDE acceleration") solvers for convex variational problems on the unit square."""
from .analysis import (
    UNIT_SQUARE_LAMBDA,
    RateBoundInputs,
    complexity_fit,
    decay_rate_fit,
    homogenization_gap,
    monotonicity_audit,
    rate_bound,
)
from .experiments import ConfigError, ExperimentConfig, build_problem, parse_config, run_experiment
from .grid import (
    ScalarField,
    VectorField,
    backward_divergence,
    five_point_laplacian,
    forward_gradient,
    grid_coordinates,
    linf_norm,
    weighted_l2_norm,
)
from .io import read_field_csv, write_field_csv, write_pgm, write_trace_csv
from .kernels import BACKEND
from .models import (
    DIRICHLET,
    HETEROGENEOUS,
    LINEARIZED,
    MINIMAL_SURFACE,
    REACTION,
    EnergyModel,
    ProblemSpec,
    checkerboard,
    contact_set,
    energy,
    energy_gradient,
    obstacle_phi1,
    obstacle_phi2,
    surface_area,
    torsion_problem,
)
from .solvers import (
    IterateDiff,
    Residual,
    SolverConfig,
    SolveTrace,
    cfl_dt,
    dual_bisection,
    gradient_descent_solve,
    is_converged,
    optimal_damping,
    pde_accel_solve,
    pde_accel_step,
    primal_dual_solve,
    relax_boundary,
    residual_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
