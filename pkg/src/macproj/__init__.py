"""Energy-stable multiplier-regularized projection solver on a 2D MAC grid."""

from .grid import (
    BoundaryTrace,
    Grid,
    ScalarField,
    VelocityField,
    divergence,
    grad_inner_vel,
    grad_norm_pressure,
    grad_seminorm_vel,
    gradient,
    inner_cell,
    inner_vel,
    laplacian_velocity,
    norm_cell,
    norm_vel,
)
from .solvers import SolveReport, SolverConfig, SolverError, helmholtz_solve, poisson_neumann_solve
from .convection import advect, convect, trilinear_b
from .stepper import (
    InvariantViolation,
    MultiplierUnsolvableError,
    QuadraticCoefficients,
    SchemeConfig,
    State,
    StepDiagnostics,
    StepWorkspace,
    energy_K,
    energy_modified,
    march,
    project_divergence_free,
    solve_multiplier_quadratic,
    step_baseline_pc,
    step_pdrlm1,
    step_pdrlm2,
)
from .problems import (
    CenterlineProfile,
    ErrorReport,
    ExactSolution,
    RateTable,
    compute_errors,
    initial_state_from_exact,
    lattice_vortex,
    run_cavity,
    run_convergence_study,
)

__version__ = "0.1.0"
