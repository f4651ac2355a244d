"""Out-of-sample Sharpe ratio and efficient-frontier estimation for
ridge-regularized mean-variance portfolios in the high-dimensional regime
p/n -> c, using only in-sample data.

Modules
-------
moments   : return panels, sample moments, MV/GMV weight construction
rmt_core  : deterministic-equivalent fixed points and plug-in estimators
sharpe    : oracle and estimated out-of-sample Sharpe ratios
frontier  : regularized efficient frontier and its corrected volatility
simgen    : synthetic designs and seeded Monte Carlo sweeps
selection : regularizer choice over finite candidate sets
backtest  : rolling monthly-rebalance evaluation on CSV panels
cli       : command-line interface over the above
"""

__version__ = "0.1.0"

from ._linalg import SingularSystemError
from .moments import (
    PortfolioWeights,
    Regularizer,
    ReturnsPanel,
    SampleMoments,
    compute_sample_moments,
    gmv_weights,
    mv_weights,
    pseudo_inverse,
)
from .rmt_core import (
    FixedPointSolution,
    PluginStatistics,
    oracle_fixed_points,
    plugin_fixed_points,
    plugin_stats,
    reg_spectrum,
    solve_s0,
    solve_s1_q,
    solve_s1_sigma,
)
from .sharpe import (
    SharpeEstimate,
    quadratic_forms,
    sr_gmv,
    sr_hat_known_mu,
    sr_hat_unknown_mu,
    sr_limit_unknown,
    sr_max,
    sr_oracle,
    sr_oracle_unknown_mu,
    unknown_mu_bias_term,
)
from .frontier import (
    AssumptionDiagnostics,
    FrontierCoefficients,
    FrontierPoint,
    assumption_diagnostics,
    frontier_coefficients,
    frontier_point,
)
from .simgen import (
    DesignSpec,
    MonteCarloReport,
    build_design,
    default_q_grid,
    derive_rng,
    gen_mu,
    gen_q,
    gen_sigma,
    q_family,
    run_monte_carlo,
    sample_returns,
)
from .selection import CandidateSet, SelectionResult, select
from .backtest import (
    BacktestConfig,
    BacktestReport,
    load_panel,
    realized_stats,
    run_backtest,
)

__all__ = [
    "AssumptionDiagnostics",
    "BacktestConfig",
    "BacktestReport",
    "CandidateSet",
    "DesignSpec",
    "FixedPointSolution",
    "FrontierCoefficients",
    "FrontierPoint",
    "MonteCarloReport",
    "PluginStatistics",
    "PortfolioWeights",
    "Regularizer",
    "ReturnsPanel",
    "SampleMoments",
    "SelectionResult",
    "SharpeEstimate",
    "SingularSystemError",
    "assumption_diagnostics",
    "build_design",
    "compute_sample_moments",
    "default_q_grid",
    "derive_rng",
    "frontier_coefficients",
    "frontier_point",
    "gen_mu",
    "gen_q",
    "gen_sigma",
    "gmv_weights",
    "load_panel",
    "mv_weights",
    "oracle_fixed_points",
    "plugin_fixed_points",
    "plugin_stats",
    "pseudo_inverse",
    "q_family",
    "quadratic_forms",
    "realized_stats",
    "reg_spectrum",
    "run_backtest",
    "run_monte_carlo",
    "sample_returns",
    "select",
    "solve_s0",
    "solve_s1_q",
    "solve_s1_sigma",
    "sr_gmv",
    "sr_hat_known_mu",
    "sr_hat_unknown_mu",
    "sr_limit_unknown",
    "sr_max",
    "sr_oracle",
    "sr_oracle_unknown_mu",
    "unknown_mu_bias_term",
]
