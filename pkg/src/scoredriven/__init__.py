"""Score-driven (generalized autoregressive score) time-series models.

Specify a model with :class:`ModelSpec`, fit it with :func:`estimate` (or
:func:`fit`), then forecast, simulate and bootstrap from the result.
"""

__version__ = "0.1.0"

from . import distributions
from .distributions import get_distribution, list_distributions
from .dynamics import BACKENDS, FilterOutput, FilterProblem, filter_pass, long_term_init, scale_score
from .errors import (
    ConvergenceWarning,
    DomainError,
    EstimationStartError,
    ResamplingError,
    SpecificationError,
    UnitRootError,
)
from .estimation import (
    ConstraintSpec,
    EstimationResult,
    build_structure,
    estimate,
    fit,
    grid_start,
    infer,
    info_criteria,
    negative_objective,
)
from .forecast import (
    ForecastResult,
    SimulationResult,
    forecast,
    forecast_mean_path,
    forecast_simulated_paths,
    simulate_series,
)
from .model import CoefSet, ModelSpec
from .optim import minimize, numeric_hessian
from .uncertainty import (
    BootstrapResult,
    FilterUncertainty,
    block_indices,
    bootstrap,
    coef_draws,
    filter_uncertainty,
)

__all__ = [
    "BACKENDS",
    "BootstrapResult",
    "CoefSet",
    "ConstraintSpec",
    "ConvergenceWarning",
    "DomainError",
    "EstimationResult",
    "EstimationStartError",
    "FilterOutput",
    "FilterProblem",
    "FilterUncertainty",
    "ForecastResult",
    "ModelSpec",
    "ResamplingError",
    "SimulationResult",
    "SpecificationError",
    "UnitRootError",
    "block_indices",
    "bootstrap",
    "build_structure",
    "coef_draws",
    "distributions",
    "estimate",
    "filter_pass",
    "filter_uncertainty",
    "fit",
    "forecast",
    "forecast_mean_path",
    "forecast_simulated_paths",
    "get_distribution",
    "grid_start",
    "infer",
    "info_criteria",
    "list_distributions",
    "long_term_init",
    "minimize",
    "negative_objective",
    "numeric_hessian",
    "scale_score",
    "simulate_series",
]
