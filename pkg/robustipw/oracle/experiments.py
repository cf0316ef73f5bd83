"""
Monte Carlo experiments on simulation designs.

Every experiment derives the dataset of replication r from (design.seed, r)
and reduces results in replication order, so reports do not depend on the
number of threads. Reports are plain JSON-ready dicts.
"""
import logging
import math
from dataclasses import replace

import numpy as np
from scipy import stats

from .. import propensity
from .._numerics import ordered_map
from ..errors import ContractError, IpwError
from ..estimator import MEAN, BiasConfig, estimate, ipw_mean, self_normalizer
from ..resample import robust_inference
from ..trimming import TrimmingSpec, select_threshold
from .designs import (
    WEIGHTS_ORACLE, generate, limit_mu, mse_optimal_threshold, rate_constant,
    stable_params, trimmed_variance, trimming_bias, truncated_moments,
)
from .stable import cf_distance, levy_cf_moderate, stable_cf, stable_sample
from .tails import tail_index_hill

logger = logging.getLogger(__name__)

REGIME_NONE = "none"
REGIME_LIGHT = "light"
REGIME_MODERATE = "moderate"
REGIME_HEAVY = "heavy"
REGIMES = (REGIME_NONE, REGIME_LIGHT, REGIME_MODERATE, REGIME_HEAVY)

DEFAULT_ZETA_GRID = (0.25, 0.5, 1.0, 1.5, 2.0)
REFERENCE_SIZE = 100_000
# third entropy word keeps reference streams apart from per-replication streams
REFERENCE_STREAM = 7


def design_weights(design, data):
    """True weights in oracle mode; fitted logit weights otherwise"""
    if design.weight_mode == WEIGHTS_ORACLE:
        return data.true_weights
    model = propensity.fit(data, propensity.LOGIT)
    return propensity.predict(model, data.x)


def regime_threshold(design, regime, t=1.0):
    """b_n for a trimming regime, on the a_n scale of the design"""
    if regime == REGIME_NONE:
        return 0.0
    n = design.n
    a_n = rate_constant(design)
    if regime == REGIME_LIGHT:
        return 1.0 / (a_n * math.log(n))
    if regime == REGIME_MODERATE:
        if t <= 0:
            raise ContractError(f"Moderate trimming needs t > 0, got {t}")
        return t / a_n
    if regime == REGIME_HEAVY:
        return math.log(n) / a_n
    raise ContractError(f"Unknown regime '{regime}'; expected one of {REGIMES}")


def _summary(values):
    values = np.asarray(values, dtype=float)
    return {
        'count': int(values.size),
        'mean': float(np.mean(values)),
        'median': float(np.median(values)),
        'q025': float(np.quantile(values, 0.025)),
        'q975': float(np.quantile(values, 0.975)),
    }


def regime_experiment(design, regime, replications, t=1.0, reference_size=REFERENCE_SIZE,
                      zeta_grid=DEFAULT_ZETA_GRID, threads=1, progress=False):
    """Distribution of the centred, scaled trimmed estimator under one regime

    Args:
        design: SimulationDesign
        regime: none, light, moderate or heavy
        replications: Number of simulated datasets
        t: b_n a_n for the moderate regime

    Returns:
        Report dict with the distances to the matching limit law
    """
    g = design.gamma0
    gaussian = g >= 2.0
    if gaussian and regime != REGIME_NONE:
        raise ContractError("Trimming regimes are defined for gamma0 < 2 only")
    b = 0.0 if gaussian else regime_threshold(design, regime, t)
    a_n = None if gaussian else rate_constant(design)
    centre = design.theta0 + trimming_bias(design, b)
    n = design.n

    def replicate(r):
        data = generate(design, r)
        weights = design_weights(design, data)
        theta_hat = ipw_mean(data, weights, b)
        if regime == REGIME_HEAVY:
            s_n = self_normalizer(data, weights, b, theta_hat)
            return math.sqrt(n) * (theta_hat - centre) / s_n
        if gaussian:
            return math.sqrt(n) * (theta_hat - centre)
        return n / a_n * (theta_hat - centre)

    statistics = np.array(ordered_map(replicate, replications, threads, progress, desc=f"regime {regime}"))
    report = {
        'experiment': 'regime',
        'regime': regime,
        'design': design.describe(),
        'replications': replications,
        'b': b,
        'a_n': a_n,
        't': b * a_n if a_n else None,
        'statistic': _summary(statistics),
    }

    if gaussian:
        sd = float(np.std(statistics, ddof=1))
        report['gaussian_ks'] = float(stats.kstest(statistics, 'norm', args=(float(np.mean(statistics)), sd)).statistic)
    elif regime == REGIME_HEAVY:
        report['studentized_gaussian_ks'] = float(stats.kstest(statistics, 'norm').statistic)
    else:
        params = stable_params(design)
        report['stable_cf_distance'] = cf_distance(statistics, lambda z: stable_cf(z, params), zeta_grid)
        if regime == REGIME_MODERATE:
            alpha_plus, alpha_minus = truncated_moments(design)
            t_limit = b * a_n
            report['moderate_cf_distance'] = cf_distance(
                statistics, lambda z: levy_cf_moderate(z, t_limit, g, alpha_plus, alpha_minus), zeta_grid)
        else:
            reference = stable_sample(params, reference_size, [design.seed, REFERENCE_STREAM, 0])
            report['stable_ks'] = float(stats.ks_2samp(statistics, reference).statistic)
    logger.info(f"Regime {regime} (gamma0={g}): "
                + ", ".join(f"{k}={v:.4f}" for k, v in report.items() if k.endswith(('_ks', '_distance'))))
    return report


def _coverage_rows(design, pipelines, subsampling, replications, threads, progress, desc):
    """Per-replication (covers robust, covers gaussian, width) for each pipeline, None on failure"""
    theta0 = design.theta0

    def replicate(r):
        data = generate(design, r)
        config = replace(subsampling, seed=subsampling.seed + r, threads=1, progress=False)
        rows = []
        for pipeline in pipelines:
            try:
                result = robust_inference(data, pipeline, config)
            except IpwError as e:
                logger.debug(f"Coverage replication {r} failed: {e}")
                rows.append(None)
                continue
            lower, upper = result.ci
            g_lower, g_upper = result.gaussian_ci
            rows.append((lower <= theta0 <= upper, g_lower <= theta0 <= g_upper, upper - lower))
        return rows

    return ordered_map(replicate, replications, threads, progress, desc=desc)


def _coverage_block(rows, level):
    done = [row for row in rows if row is not None]
    if not done:
        return {'coverage': None, 'mc_se': None, 'gaussian_coverage': None,
                'mean_width': None, 'failed': len(rows), 'level': level}
    covered = np.array([row[0] for row in done], dtype=float)
    coverage = float(covered.mean())
    return {
        'coverage': coverage,
        'mc_se': math.sqrt(coverage * (1.0 - coverage) / covered.size),
        'gaussian_coverage': float(np.mean([row[1] for row in done])),
        'mean_width': float(np.mean([row[2] for row in done])),
        'failed': len(rows) - len(done),
        'level': level,
    }


def coverage_experiment(design, pipeline, subsampling, replications, threads=1, progress=False):
    """Fraction of robust intervals covering theta0, with Monte Carlo standard error"""
    rows = _coverage_rows(design, [pipeline], subsampling, replications, threads, progress, "coverage")
    block = _coverage_block([row[0] for row in rows], 1.0 - subsampling.alpha)
    logger.info(f"Coverage {block['coverage']} (+/- {block['mc_se']}) over {replications} replications")
    return {
        'experiment': 'coverage',
        'design': design.describe(),
        'trimming': pipeline.trimming.describe(),
        'bias_correction': pipeline.bias.enabled,
        'replications': replications,
        'subsample_replications': subsampling.replications,
        **block,
    }


def bias_ablation_experiment(design, pipeline, subsampling, replications, threads=1, progress=False):
    """Paired coverage with and without bias correction on the same datasets"""
    with_bc = replace(pipeline, bias=replace(pipeline.bias, enabled=True))
    without_bc = replace(pipeline, bias=replace(pipeline.bias, enabled=False))
    rows = _coverage_rows(design, [with_bc, without_bc], subsampling, replications, threads, progress, "ablation")
    level = 1.0 - subsampling.alpha
    corrected = _coverage_block([row[0] for row in rows], level)
    uncorrected = _coverage_block([row[1] for row in rows], level)
    loss = None
    if corrected['coverage'] is not None and uncorrected['coverage'] is not None:
        loss = corrected['coverage'] - uncorrected['coverage']
    return {
        'experiment': 'ablation',
        'design': design.describe(),
        'trimming': pipeline.trimming.describe(),
        'replications': replications,
        'with_bias_correction': corrected,
        'without_bias_correction': uncorrected,
        'coverage_loss': loss,
    }


def bias_variance_check(design, b_grid, replications, threads=1, progress=False):
    """Analytic trimming bias and variance against Monte Carlo, and the B^2/V scaling"""
    b_grid = [float(b) for b in b_grid]
    if not b_grid or min(b_grid) <= 0 or max(b_grid) >= 1:
        raise ContractError("Thresholds must lie in (0, 1)")
    n = design.n

    def replicate(r):
        data = generate(design, r)
        weights = design_weights(design, data)
        return [ipw_mean(data, weights, b) for b in b_grid]

    estimates = np.array(ordered_map(replicate, replications, threads, progress, desc="bias-variance"))
    rows = []
    for j, b in enumerate(b_grid):
        column = estimates[:, j]
        mc_bias = float(column.mean()) - design.theta0
        mc_se = float(column.std(ddof=1)) / math.sqrt(replications)
        bias = trimming_bias(design, b)
        variance = trimmed_variance(design, b) / n
        rows.append({
            'b': b,
            'analytic_bias': bias,
            'mc_bias': mc_bias,
            'mc_se': mc_se,
            'bias_within_3se': abs(mc_bias - bias) <= 3.0 * mc_se,
            'analytic_variance': variance,
            'mc_variance': float(column.var(ddof=1)),
            'ratio': bias ** 2 / variance,
            'scale': n * b * float(design.weight_cdf(b)),
        })
    slope = float(np.polyfit(np.log([row['scale'] for row in rows]), np.log([row['ratio'] for row in rows]), 1)[0]) \
        if len(rows) > 1 else None
    return {
        'experiment': 'bias_variance',
        'design': design.describe(),
        'replications': replications,
        'rows': rows,
        'log_log_slope': slope,
    }


def selector_consistency(design, replications, s=1.0, threads=1, progress=False):
    """Selected threshold over its closed-form target, using the true mu ratio"""
    mu1, mu2 = limit_mu(design)
    target = mse_optimal_threshold(design, s)

    def replicate(r):
        data = generate(design, r)
        return select_threshold(design_weights(design, data), s, mu1, mu2)

    ratios = np.array(ordered_map(replicate, replications, threads, progress, desc="selector")) / target
    within = float(np.mean((ratios >= 0.9) & (ratios <= 1.1)))
    logger.info(f"Selector: {within:.1%} of ratios within [0.9, 1.1]")
    return {
        'experiment': 'selector',
        'design': design.describe(),
        'replications': replications,
        's': s,
        'target_threshold': target,
        'ratio': _summary(ratios),
        'fraction_within_10pct': within,
    }


def bias_recovery_experiment(design, replications, trimming=None, bias=None, bandwidth=None,
                             tolerance=0.15, threads=1, progress=False):
    """Estimated trimming bias against the analytic bias at the selected threshold"""
    trimming = TrimmingSpec() if trimming is None else trimming
    bias = BiasConfig() if bias is None else bias
    if not bias.enabled:
        raise ContractError("Bias recovery needs bias correction enabled")

    def replicate(r):
        data = generate(design, r)
        result = estimate(data, None, MEAN, trimming, bias, weights=design_weights(design, data),
                          bandwidth=bandwidth)
        truth = trimming_bias(design, result.b)
        if truth == 0:
            return None
        return abs(result.bias_hat - truth) / abs(truth)

    errors = [e for e in ordered_map(replicate, replications, threads, progress, desc="bias recovery")
              if e is not None]
    if not errors:
        raise ContractError("No replication trimmed anything; the analytic bias is zero")
    errors = np.array(errors)
    return {
        'experiment': 'bias',
        'design': design.describe(),
        'replications': replications,
        'trimming': trimming.describe(),
        'order': bias.order,
        'bandwidth': bandwidth,
        'tolerance': tolerance,
        'relative_error': _summary(errors),
        'fraction_within_tolerance': float(np.mean(errors <= tolerance)),
    }


def hill_experiment(design, replications, k, tolerance=0.1, threads=1, progress=False):
    """Hill estimates of gamma0 on replicated weight samples"""
    def replicate(r):
        return tail_index_hill(design_weights(design, generate(design, r)), k)

    estimates = np.array(ordered_map(replicate, replications, threads, progress, desc="hill"))
    return {
        'experiment': 'hill',
        'design': design.describe(),
        'replications': replications,
        'k': k,
        'estimate': _summary(estimates),
        'fraction_within_tolerance': float(np.mean(np.abs(estimates - design.gamma0) <= tolerance)),
        'tolerance': tolerance,
    }
