"""Legendre gPC surrogates and the exact densities of their pushforward measures."""
from ._backend import BACKEND
from .errors import (
    ConvergenceError,
    DomainError,
    GpcError,
    NumericalError,
    PreconditionError,
    RegistryError,
    UnresolvedOscillationError,
)
from .experiments import SweepConfig, reproduce, run_sweep
from .legendre import (
    LegendreSeries,
    QuadratureRule,
    RuleKind,
    eval_legendre,
    eval_series,
    gauss_legendre_rule,
    gauss_lobatto_rule,
)
from .metrics import SweepRecord, fit_rate, lq_density_distance, predicted_exponent, wasserstein
from .pushforward import (
    DensityGrid,
    InputDensity,
    PiecewiseMonotoneMap,
    cdf,
    get_density,
    histogram_density,
    monotone_decomposition,
    pdf,
    pdf_grid,
    quantile,
    sample_pushforward,
)
from .surrogate import (
    Method,
    Norm,
    QuantityOfInterest,
    error_norms,
    fit,
    fit_collocation,
    fit_galerkin,
    get_function,
)

__version__ = "0.1.0"
