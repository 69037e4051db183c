"""Variable step-size BDF2 time stepping for linear and semilinear parabolic problems."""

from .norms import (
    ErrorReport,
    consistency_error_d1,
    consistency_error_d2,
    error_report,
    l2_hh_norm,
    observed_order,
)
from .problems import (
    Heat1D,
    MatrixProblem,
    ProblemDefinition,
    Semilinear2D,
    heat1d_problem,
    semilinear2d_problem,
    solve_tridiagonal,
)
from .stability import (
    R0,
    R1,
    CertificateNotApplicable,
    c3_constant,
    check_ratio_bound,
    cR_constant,
    kmax_bound_R0,
    stability_certificate_thm31,
)
from .stepper import (
    Bdf2Coefficients,
    ConvergenceError,
    SolverConfig,
    SolverDiagnostics,
    StepError,
    Trajectory,
    bdf2_coefficients,
    bdf2_divided_difference,
    decomposition_check,
    integrate,
    start_backward_euler,
    start_trapezoidal,
    step_linear,
    step_semilinear,
)
from .time_mesh import (
    MeshError,
    MeshStats,
    TimeMesh,
    from_nodes,
    geometric_mesh,
    graded_mesh,
    mesh_stats,
    uniform_mesh,
)

__all__ = [
    "ErrorReport",
    "consistency_error_d1",
    "consistency_error_d2",
    "error_report",
    "l2_hh_norm",
    "observed_order",
    "Heat1D",
    "MatrixProblem",
    "ProblemDefinition",
    "Semilinear2D",
    "heat1d_problem",
    "semilinear2d_problem",
    "solve_tridiagonal",
    "R0",
    "R1",
    "CertificateNotApplicable",
    "c3_constant",
    "check_ratio_bound",
    "cR_constant",
    "kmax_bound_R0",
    "stability_certificate_thm31",
    "Bdf2Coefficients",
    "ConvergenceError",
    "SolverConfig",
    "SolverDiagnostics",
    "StepError",
    "Trajectory",
    "bdf2_coefficients",
    "bdf2_divided_difference",
    "decomposition_check",
    "integrate",
    "start_backward_euler",
    "start_trapezoidal",
    "step_linear",
    "step_semilinear",
    "MeshError",
    "MeshStats",
    "TimeMesh",
    "from_nodes",
    "geometric_mesh",
    "graded_mesh",
    "mesh_stats",
    "uniform_mesh",
]

__version__ = "0.1.0"
