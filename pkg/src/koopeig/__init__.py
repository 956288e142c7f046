"""Principal Koopman eigenfunctions of nonlinear ODE systems.

The linear part of a principal eigenfunction is a left eigenvector of the
linearization at a hyperbolic equilibrium; the nonlinear part is computed
as a path integral along trajectories, with applicability gated by
spectral conditions and certified per point by an adaptive tail estimate.
Built on top of that: stable-manifold extraction from zero level sets,
Lyapunov-function construction, and labeled-dataset export for a neural
trainer.
"""

from . import acceptance, datasetio, eigfn, field, flow, lyapunov, spectral, systems
from .eigfn import (
    PrincipalEigenfunction,
    build,
    calibrate_scale,
    eigen_property_residual,
    evaluate,
    evaluate_batch,
    laplace_average,
    pde_residual,
)
from .errors import KoopeigError
from .flow import Direction, IntegratorConfig
from .spectral import EvaluationMode, StabilityClass
from .systems import SystemInstance, builtin, parse_polynomial, refine_equilibrium

__version__ = "0.1.0"

__all__ = [
    "systems",
    "spectral",
    "flow",
    "eigfn",
    "field",
    "lyapunov",
    "datasetio",
    "acceptance",
    "SystemInstance",
    "PrincipalEigenfunction",
    "IntegratorConfig",
    "Direction",
    "EvaluationMode",
    "StabilityClass",
    "KoopeigError",
    "builtin",
    "parse_polynomial",
    "refine_equilibrium",
    "build",
    "evaluate",
    "evaluate_batch",
    "calibrate_scale",
    "eigen_property_residual",
    "pde_residual",
    "laplace_average",
]
