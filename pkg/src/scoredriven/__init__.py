"""Score-driven time-varying parameter models.

Conditional distributions with analytic scores and information matrices,
link functions to unconstrained working coordinates, the score-driven
filter and simulator, maximum-likelihood estimation, density forecasting
with rolling backtests, and density-forecast scoring.
"""

from . import distributions, errors
from .core import (
    Coefficients,
    FilterOutput,
    GasSpec,
    SimOutput,
    gas_filter,
    scaled_score,
    simulate,
    target_kappa,
)
from .estimation import (
    FitResult,
    OptimizerConfig,
    fit,
    fit_static,
    negative_loglik,
    std_errors,
)
from .forecasting import (
    ForecastResult,
    RollResult,
    forecast,
    predictive_moments_and_quantiles,
    roll,
)
from .links import links_for, map_params, unmap_params
from .scoring import (
    DensityBacktestResult,
    DMResult,
    WeightSpec,
    backtest_density,
    cls_series,
    dm_test,
    nls,
    wcrps,
)

__version__ = "0.1.0"

__all__ = [
    "Coefficients",
    "DensityBacktestResult",
    "DMResult",
    "FilterOutput",
    "FitResult",
    "ForecastResult",
    "GasSpec",
    "OptimizerConfig",
    "RollResult",
    "SimOutput",
    "WeightSpec",
    "backtest_density",
    "cls_series",
    "distributions",
    "dm_test",
    "errors",
    "fit",
    "fit_static",
    "forecast",
    "gas_filter",
    "links_for",
    "map_params",
    "negative_loglik",
    "nls",
    "predictive_moments_and_quantiles",
    "roll",
    "scaled_score",
    "simulate",
    "std_errors",
    "target_kappa",
    "unmap_params",
    "wcrps",
]
