"""Transverse spectral stability toolkit for one-dimensional solitary waves.

The package certifies the instability mechanism in three moves: audit the
spectral hypotheses of the underlying theorem, locate the wavenumber where
the operator family develops a kernel, and continue the unstable branch
out of that kernel with an independent pencil solve as cross-check.
"""

__version__ = "0.1.0"

from .bifurcation import (
    Branch,
    BranchPoint,
    GrowthSample,
    PencilSolution,
    branch_jacobian,
    growth_curve,
    pencil_eigen_near,
    residual_G,
    trace_branch,
)
from .errors import (
    BadProfileFile,
    ConfigError,
    EigFailure,
    HypEulerViolated,
    InvalidGrid,
    InvalidSpeed,
    KernelNotSimple,
    NewtonDiverged,
    NoBracket,
    NoConvergence,
    NoNegativeDirection,
    NoSignChange,
    ProfileNotPositive,
    SaturatedCount,
    ShiftSingular,
    SingularBlock,
    SingularBorder,
    TspecError,
)
from .models import (
    EKParams,
    GPBlackParams,
    KPIParams,
    Profile,
    ek_essential_floor,
    ek_family,
    ek_params_from_profile,
    ek_schur_M,
    gp_black_family,
    gp_dark_ek_params,
    gp_dark_profile,
    hypeuler_check,
    kpi_family,
    kpi_profile,
    load_profile_csv,
)
from .numgrid import (
    EigPairs,
    Grid,
    bisect,
    bordered_solve,
    build_grid,
    diff1,
    diff2,
    sym_eigs,
    symmetrize,
)
from .opcore import (
    BlockOperator,
    FindK0Result,
    HypothesisOptions,
    HypothesisReport,
    OperatorFamily,
    SpectralReport,
    check_hypotheses,
    count_negative,
    find_k0,
    lambda_min,
    lprime_fd_error,
    schur_complement,
    schur_quadratic,
    spectral_report,
)

__all__ = [
    "__version__",
    "Branch",
    "BranchPoint",
    "GrowthSample",
    "PencilSolution",
    "branch_jacobian",
    "growth_curve",
    "pencil_eigen_near",
    "residual_G",
    "trace_branch",
    "BadProfileFile",
    "ConfigError",
    "EigFailure",
    "HypEulerViolated",
    "InvalidGrid",
    "InvalidSpeed",
    "KernelNotSimple",
    "NewtonDiverged",
    "NoBracket",
    "NoConvergence",
    "NoNegativeDirection",
    "NoSignChange",
    "ProfileNotPositive",
    "SaturatedCount",
    "ShiftSingular",
    "SingularBlock",
    "SingularBorder",
    "TspecError",
    "EKParams",
    "GPBlackParams",
    "KPIParams",
    "Profile",
    "ek_essential_floor",
    "ek_family",
    "ek_params_from_profile",
    "ek_schur_M",
    "gp_black_family",
    "gp_dark_ek_params",
    "gp_dark_profile",
    "hypeuler_check",
    "kpi_family",
    "kpi_profile",
    "load_profile_csv",
    "EigPairs",
    "Grid",
    "bisect",
    "bordered_solve",
    "build_grid",
    "diff1",
    "diff2",
    "sym_eigs",
    "symmetrize",
    "BlockOperator",
    "FindK0Result",
    "HypothesisOptions",
    "HypothesisReport",
    "OperatorFamily",
    "SpectralReport",
    "check_hypotheses",
    "count_negative",
    "find_k0",
    "lambda_min",
    "lprime_fd_error",
    "schur_complement",
    "schur_quadratic",
    "spectral_report",
]
