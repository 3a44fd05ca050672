"""Variance-decomposition connectedness networks with clustered identification."""

from .connect import (
    ConnectednessReport,
    IrfSet,
    VdMatrix,
    irf,
    kde_density,
    measures,
    vd,
    vd_ordering_averaged,
)
from .errors import ConfigError, ConvergenceError, DataError, EstimationError, SpillnetError
from .identify import (
    ClusterSpec,
    Identification,
    MaCoefficients,
    block_inverse_2x2,
    cholesky_factor,
    clusterizer,
    ma_coefficients,
    make_identification,
)
from .returns import (
    PricePanel,
    ReturnPanel,
    SummaryStats,
    daily_log_returns,
    read_price_csv,
    summary_stats,
    weekly_aggregate,
    weekly_returns_from_prices,
)
from .rolling import MeasureSeries, RollingConfig, difference_series, roll
from .synth import synthetic_price_panel
from .varnet import (
    PenaltyPath,
    VarModel,
    adaptive_elastic_net_fit,
    cross_validate_lambda,
    fit_var,
    ols_fit,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterSpec",
    "ConfigError",
    "ConnectednessReport",
    "ConvergenceError",
    "DataError",
    "EstimationError",
    "Identification",
    "IrfSet",
    "MaCoefficients",
    "MeasureSeries",
    "PenaltyPath",
    "PricePanel",
    "ReturnPanel",
    "RollingConfig",
    "SpillnetError",
    "SummaryStats",
    "VarModel",
    "VdMatrix",
    "adaptive_elastic_net_fit",
    "block_inverse_2x2",
    "cholesky_factor",
    "clusterizer",
    "cross_validate_lambda",
    "daily_log_returns",
    "difference_series",
    "fit_var",
    "irf",
    "kde_density",
    "ma_coefficients",
    "make_identification",
    "measures",
    "ols_fit",
    "read_price_csv",
    "roll",
    "summary_stats",
    "synthetic_price_panel",
    "vd",
    "vd_ordering_averaged",
    "weekly_aggregate",
    "weekly_returns_from_prices",
]
