"""divbar: finite-horizon optimal dividend barrier solvers.

Three mutually validating routes to the optimal barrier b(t) and the value
function V(t, x): a Volterra integral equation for the free boundary, a
finite-difference obstacle-problem solve of the linked optimal stopping
problem, and Monte Carlo simulation of the reflected dividend strategy.
"""

from .errors import (
    ConfigError,
    DivbarError,
    DomainError,
    GridMismatchError,
    KernelOverflowError,
    MissingArtifactError,
    NoBracketError,
    NonMonotoneBeyondCellError,
    NonMonotoneError,
    PsorDivergedError,
    TrivialProblemError,
    XmaxTooSmallError,
)
from .integral_equation import (
    IeSolverConfig,
    boundary_asymptote,
    default_b_max,
    ie_residual,
    solve_integral_equation,
)
from .mc import (
    McConfig,
    McEstimate,
    PathRecord,
    StoppingPathRecord,
    record_dividend_paths,
    record_stopping_paths,
    simulate_dividend_value,
    simulate_stopping_value,
    simulate_suboptimal,
    ux_representation_estimate,
)
from .model import (
    Boundary,
    ModelParams,
    SpaceGrid,
    TimeGrid,
    exp_max_moment,
    lambda_of,
    reflected_survival,
    running_max_atom,
    running_max_density,
    running_max_tail,
    running_max_tail_integral,
)
from .pde import (
    PdeConfig,
    ValueSurface,
    creation_residual,
    default_pde_config,
    extract_boundary,
    integrate_V,
    smooth_fit_residual,
    solve_U,
    trivial_value,
    verification_residuals,
)
from .report import CheckResult, VerificationReport

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "CheckResult",
    "ConfigError",
    "DivbarError",
    "DomainError",
    "GridMismatchError",
    "IeSolverConfig",
    "KernelOverflowError",
    "McConfig",
    "McEstimate",
    "MissingArtifactError",
    "ModelParams",
    "NoBracketError",
    "NonMonotoneBeyondCellError",
    "NonMonotoneError",
    "PathRecord",
    "PdeConfig",
    "PsorDivergedError",
    "SpaceGrid",
    "StoppingPathRecord",
    "TimeGrid",
    "TrivialProblemError",
    "ValueSurface",
    "VerificationReport",
    "XmaxTooSmallError",
    "boundary_asymptote",
    "creation_residual",
    "default_b_max",
    "default_pde_config",
    "exp_max_moment",
    "extract_boundary",
    "ie_residual",
    "integrate_V",
    "lambda_of",
    "record_dividend_paths",
    "record_stopping_paths",
    "reflected_survival",
    "running_max_atom",
    "running_max_density",
    "running_max_tail",
    "running_max_tail_integral",
    "simulate_dividend_value",
    "simulate_stopping_value",
    "simulate_suboptimal",
    "smooth_fit_residual",
    "solve_U",
    "solve_integral_equation",
    "trivial_value",
    "ux_representation_estimate",
    "verification_residuals",
]
