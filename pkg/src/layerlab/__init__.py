"""Solver and convergence laboratory for weakly coupled singularly
perturbed reaction-diffusion pairs with Robin boundary conditions.

The pieces compose in pipeline order: problems (instances and their
assumptions), meshes (layer-adapted grids), discretize (spline-boundary
finite differences), linsolve (block-tridiagonal elimination), errorlab
(two-mesh convergence estimation), cli (batch front end).
"""

from .discretize import (
    AssemblyError,
    DiscreteSystem,
    MMatrixReport,
    TruncationReport,
    assemble,
    m_matrix_audit,
    spline_derivative_coeffs,
    truncation_identities,
    write_system_csv,
)
from .errorlab import (
    DEFAULT_EPS_LIST,
    ConvergenceReport,
    ErrorCell,
    SweepError,
    decade_mu_rule,
    error_table_markdown,
    error_vs_fine,
    interp_linear,
    layer_diagnostics,
    rates_markdown,
    two_mesh_difference,
    uniform_sweep,
    write_error_table_csv,
    write_rates_csv,
)
from .linsolve import (
    LinearSolveError,
    SolutionGrid,
    data_rounding_noise,
    solve,
    solve_dense_reference,
    solve_problem,
    write_solution_csv,
)
from .meshes import (
    BAKHVALOV_SHISHKIN,
    MESH_KINDS,
    SHISHKIN,
    UNIFORM,
    Mesh,
    MeshParameterError,
    MeshParams,
    bakhvalov_shishkin,
    build,
    default_lambda,
    graded_junction_mismatch,
    refine_pinned,
    shishkin,
    step_sizes,
    transition_params,
    uniform,
    write_mesh_csv,
)
from .problems import (
    BUILTIN_NAMES,
    CoefficientEvaluationError,
    ProblemSpec,
    RobinBC,
    ValidationReport,
    builtin,
    exact_solution,
    grid_values,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BAKHVALOV_SHISHKIN",
    "BUILTIN_NAMES",
    "CoefficientEvaluationError",
    "ConvergenceReport",
    "DEFAULT_EPS_LIST",
    "DiscreteSystem",
    "ErrorCell",
    "LinearSolveError",
    "MESH_KINDS",
    "MMatrixReport",
    "Mesh",
    "MeshParameterError",
    "MeshParams",
    "ProblemSpec",
    "RobinBC",
    "SHISHKIN",
    "SolutionGrid",
    "SweepError",
    "TruncationReport",
    "UNIFORM",
    "ValidationReport",
    "assemble",
    "bakhvalov_shishkin",
    "build",
    "builtin",
    "data_rounding_noise",
    "decade_mu_rule",
    "default_lambda",
    "error_table_markdown",
    "error_vs_fine",
    "exact_solution",
    "graded_junction_mismatch",
    "grid_values",
    "interp_linear",
    "layer_diagnostics",
    "m_matrix_audit",
    "rates_markdown",
    "refine_pinned",
    "shishkin",
    "solve",
    "solve_dense_reference",
    "solve_problem",
    "spline_derivative_coeffs",
    "step_sizes",
    "transition_params",
    "truncation_identities",
    "two_mesh_difference",
    "uniform",
    "uniform_sweep",
    "validate",
    "write_error_table_csv",
    "write_mesh_csv",
    "write_rates_csv",
    "write_solution_csv",
    "write_system_csv",
]
