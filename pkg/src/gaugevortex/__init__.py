"""Magneto-static vortex profiles of the planar gauged Klein-Gordon-Maxwell
system: penalized mountain-pass solver, Newton refinement, eps-continuation
and an independent shooting cross-check."""

from .exceptions import (
    ConfigurationError,
    ConstraintViolationError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    GaugeVortexError,
    GeometryFailureError,
    OracleFailureError,
    ShapeError,
    SingularSystemError,
    StagnationError,
)
from .functional import (
    EnergyBreakdown,
    State,
    StrongResidual,
    curl_energy_2d,
    curl_energy_radial,
    el_residual,
    energy,
    free_mask,
    grad_norm,
    gradient,
    hessian_vec,
    residual_2d_spotcheck,
)
from .grid import (
    RadialGrid,
    integrate_drr,
    integrate_rdr,
    make_graded_grid,
    norm_h1,
    norm_h1r,
    norm_star,
    star_norm_info,
)
from .model import (
    AssumptionReport,
    ModelParams,
    check_assumptions,
    potential_W,
    potential_Wprime,
    potential_Wsecond,
)

__version__ = "0.1.0"
