"""Numerical laboratory for the variable-coefficient thin obstacle problem."""

from .grid import (
    Ball,
    BallQuadrature,
    Grid,
    GridField,
    Sphere,
    dirichlet_energy,
    interpolate,
    ladder_radii,
    norm_l2_avg,
    norm_l2_tilde,
    sample_function,
)
from .coefficients import (
    CoefficientField,
    HoelderEstimate,
    check_condition_N,
    estimate_seminorm,
    generate_field,
    identity_coefficients,
    normalize_at_origin,
)
from .profiles import (
    ConeProfile,
    EigenProfile,
    LinearProfile,
    LogProfile,
    eigen_slit_spectrum,
    evaluate,
    laplacian_log_example,
    model_cone,
    sample,
)
from .solver import (
    DiscreteProblem,
    PenaltyConfig,
    SolutionField,
    assemble,
    derive_G,
    solve_nested,
    solve_penalized,
    solve_psor,
)

__version__ = "0.1.0"
