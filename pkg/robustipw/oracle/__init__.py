"""
Simulation designs with known truth, stable limit laws and the Monte Carlo
experiments built on them.
"""
from .designs import (
    NORMAL, SHIFTED_EXPONENTIAL, WEIGHTS_LOGIT, WEIGHTS_ORACLE, SimulationDesign, generate,
    limit_mu, mse_optimal_threshold, rate_constant, stable_params, trimmed_variance,
    trimming_bias, truncated_moments,
)
from .experiments import (
    REGIMES, bias_ablation_experiment, bias_recovery_experiment, bias_variance_check,
    coverage_experiment, hill_experiment, regime_experiment, regime_threshold, selector_consistency,
)
from .stable import StableParams, cf_distance, empirical_cf, levy_cf_moderate, stable_cf, stable_sample
from .tails import tail_balance_check, tail_diagnostics, tail_index_hill

__all__ = [
    'SimulationDesign', 'generate', 'limit_mu', 'mse_optimal_threshold', 'rate_constant',
    'stable_params', 'trimmed_variance', 'trimming_bias', 'truncated_moments',
    'NORMAL', 'SHIFTED_EXPONENTIAL', 'WEIGHTS_LOGIT', 'WEIGHTS_ORACLE',
    'StableParams', 'stable_cf', 'levy_cf_moderate', 'stable_sample', 'empirical_cf', 'cf_distance',
    'tail_index_hill', 'tail_diagnostics', 'tail_balance_check',
    'REGIMES', 'regime_threshold', 'regime_experiment', 'coverage_experiment', 'bias_ablation_experiment',
    'bias_variance_check', 'selector_consistency', 'bias_recovery_experiment', 'hill_experiment',
]
