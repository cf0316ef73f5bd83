import math

import numpy as np
import pytest
from scipy import stats

from robustipw.errors import ConfigurationError, ContractError, DiagnosticError
from robustipw.estimator import WEIGHTS_TRUE, BiasConfig, PipelineConfig
from robustipw.oracle import (
    SHIFTED_EXPONENTIAL, WEIGHTS_LOGIT, SimulationDesign, StableParams, bias_ablation_experiment,
    bias_recovery_experiment, bias_variance_check, coverage_experiment, empirical_cf, generate,
    hill_experiment, levy_cf_moderate, mse_optimal_threshold, rate_constant, regime_experiment,
    regime_threshold, selector_consistency, stable_cf, stable_sample, tail_balance_check, tail_diagnostics,
    tail_index_hill, trimmed_variance, trimming_bias, truncated_moments,
)
from robustipw.oracle.stable import stable_log_cf
from robustipw.resample import SubsamplingConfig
from robustipw.trimming import UPPER_TAIL, TrimmingSpec

ZETAS = np.array([0.25, 0.5, 1.0, 1.5, 2.0])


# -- stable laws --

def test_stable_log_cf_value():
    assert stable_log_cf(1.0, StableParams(1.5)).real == pytest.approx(-0.835543, abs=1e-6)


def test_stable_cf_normalisation_and_gaussian_endpoint():
    assert stable_cf(0.0, StableParams(1.5)) == 1.0
    gaussian = StableParams(2.0)
    for zeta in (0.5, 1.0, 3.0):
        assert abs(stable_cf(zeta, gaussian) - math.exp(-zeta ** 2 / 2.0)) <= 1e-12


def test_stable_cf_symmetry():
    params = StableParams(1.6)
    values = stable_cf(ZETAS, params)
    assert np.all(np.abs(values.imag) == 0)
    skewed = StableParams(1.6, alpha_plus=2.0, alpha_minus=0.5)
    assert stable_cf(-1.0, skewed) == pytest.approx(np.conj(stable_cf(1.0, skewed)))


def test_stable_params_validation():
    with pytest.raises(ContractError):
        StableParams(1.0)
    with pytest.raises(ContractError):
        StableParams(1.5, alpha_plus=0.0, alpha_minus=0.0)


@pytest.mark.parametrize("alpha_plus, alpha_minus", [(1.0, 1.0), (1.5, 0.5)])
def test_levy_cf_without_trimming_is_stable(alpha_plus, alpha_minus):
    params = StableParams(1.5, alpha_plus, alpha_minus)
    for zeta in (-1.0, 0.5, 1.0, 2.0):
        levy = levy_cf_moderate(zeta, 0.0, 1.5, lambda x: alpha_plus, lambda x: alpha_minus)
        assert abs(levy - stable_cf(zeta, params)) <= 1e-6


def test_levy_cf_zero_frequency():
    assert levy_cf_moderate(0.0, 1.0, 1.5, lambda x: 1.0, lambda x: 1.0) == 1.0


def riemann_levy_cf(zeta, t, g, grid_size=300_000):
    """Midpoint rule after u = v^2, with tail masses of N(0, 1) tabulated by the trapezoid rule"""
    y = np.linspace(-12.0, 12.0, 240_001)
    density = np.abs(y) ** g * stats.norm.pdf(y)
    cumulative = np.concatenate([[0.0], np.cumsum((density[1:] + density[:-1]) / 2.0 * np.diff(y))])
    total = cumulative[-1]

    def alpha_minus(x):
        return np.interp(x, y, cumulative)

    def alpha_plus(x):
        return total - np.interp(x, y, cumulative)

    K = (2.0 - g) / total
    upper = 3.0
    v = (np.arange(grid_size) + 0.5) * upper / grid_size
    u = v ** 2
    plus = alpha_plus(t * u)
    minus = alpha_minus(-t * u)
    # u^(1-g) du = 2 v^(3-2g) dv
    jacobian = 2.0 * v ** (3.0 - 2.0 * g)
    cos_part = -2.0 * np.sin(zeta * u / 2.0) ** 2 / u ** 2
    sin_part = (np.sin(zeta * u) - zeta * u) / u ** 2
    real = np.sum(cos_part * K * (plus + minus) * jacobian) * upper / grid_size
    imag = np.sum(sin_part * K * (plus - minus) * jacobian) * upper / grid_size
    return complex(np.exp(real + 1j * imag))


def test_levy_cf_moderate_matches_riemann_sum():
    design = SimulationDesign(gamma0=1.5, n=100, mu1_coefficients=(0.0,), noise_sd=1.0)
    alpha_plus, alpha_minus = truncated_moments(design)
    value = levy_cf_moderate(1.0, 1.0, 1.5, alpha_plus, alpha_minus)
    assert abs(value - riemann_levy_cf(1.0, 1.0, 1.5)) <= 1e-4
    assert abs(value.imag) <= 1e-6


def test_moderate_trimming_thins_the_tails():
    design = SimulationDesign(gamma0=1.5, n=100, mu1_coefficients=(0.0,))
    alpha_plus, alpha_minus = truncated_moments(design)
    untrimmed = abs(levy_cf_moderate(1.0, 0.0, 1.5, alpha_plus, alpha_minus))
    trimmed = abs(levy_cf_moderate(1.0, 2.0, 1.5, alpha_plus, alpha_minus))
    assert trimmed > untrimmed


def test_sampler_matches_cf():
    count = 100_000
    for params in (StableParams(1.5), StableParams(1.3, alpha_plus=2.0, alpha_minus=0.5)):
        sample = stable_sample(params, count, seed=[1, 2])
        distance = np.max(np.abs(empirical_cf(sample, ZETAS) - stable_cf(ZETAS, params)))
        assert distance < 5.0 / math.sqrt(count)


def test_sampler_symmetric_law():
    count = 100_000
    sample = stable_sample(StableParams(1.5), count, seed=3)
    # heavy tails leave skewness undefined; the sign balance is binomial
    positive = np.mean(sample > 0)
    assert abs(positive - 0.5) <= 3.0 * math.sqrt(0.25 / count)


def test_sampler_near_gaussian_quantile():
    params = StableParams(1.9)
    sample = stable_sample(params, 100_000, seed=4)
    # index 2 in the S1 parameterisation is N(0, 2 sigma^2)
    gaussian = 1.96 * math.sqrt(2.0) * params.scale
    assert np.quantile(sample, 0.975) == pytest.approx(gaussian, rel=0.1)


def test_sampler_is_seeded():
    params = StableParams(1.5)
    assert np.array_equal(stable_sample(params, 10, 5), stable_sample(params, 10, 5))
    with pytest.raises(ContractError):
        stable_sample(params, 0, 5)


# -- designs --

def test_design_truth():
    design = SimulationDesign(gamma0=1.5, n=100, mu1_coefficients=(1.0, 2.0))
    assert design.theta0 == pytest.approx(5.0 / 3.0)
    assert design.mu2_coefficients == pytest.approx((2.0, 4.0, 4.0))


def test_design_validation():
    with pytest.raises(ConfigurationError):
        SimulationDesign(gamma0=1.0, n=100)
    with pytest.raises(ConfigurationError):
        SimulationDesign(gamma0=1.5, n=100, outcome_family="cauchy")


def test_generated_weight_cdf():
    data = generate(SimulationDesign(gamma0=1.5, n=100_000, seed=1))
    observed = np.mean(data.true_weights <= 0.01)
    assert abs(observed - 0.1) <= 3.0 * math.sqrt(0.1 * 0.9 / 100_000)
    assert data.covariate_names == ("e",)
    assert np.array_equal(data.column("e"), data.true_weights)


def test_generate_is_reproducible():
    design = SimulationDesign(gamma0=1.5, n=50, seed=3)
    assert np.array_equal(generate(design, 4).y, generate(design, 4).y)
    assert not np.array_equal(generate(design, 4).y, generate(design, 5).y)


def test_logit_mode_exposes_index():
    data = generate(SimulationDesign(gamma0=1.5, n=1000, seed=2, weight_mode=WEIGHTS_LOGIT))
    e = data.true_weights
    np.testing.assert_allclose(1.0 / (1.0 + np.exp(-data.column("index"))), e, rtol=1e-9)


def test_shifted_exponential_noise_is_centred():
    data = generate(SimulationDesign(gamma0=2.5, n=200_000, mu1_coefficients=(3.0,),
                                     outcome_family=SHIFTED_EXPONENTIAL, seed=6))
    assert np.mean(data.y) == pytest.approx(3.0, abs=0.02)


def test_trimming_bias_closed_form():
    design = SimulationDesign(gamma0=1.5, n=100, mu1_coefficients=(1.0, 2.0))
    b = 0.04
    expected = -(b ** 0.5 + 2.0 * (0.5 / 1.5) * b ** 1.5)
    assert trimming_bias(design, b) == pytest.approx(expected)
    assert trimming_bias(design, 0.0) == 0.0
    assert trimming_bias(design, 1.0) == pytest.approx(-design.theta0)


def test_trimmed_variance_closed_form():
    design = SimulationDesign(gamma0=2.5, n=100)
    # E[(DY/e)^2] = 2 E[1/e] = 6, mean 1
    assert trimmed_variance(design, 0.0) == pytest.approx(5.0)
    assert trimmed_variance(SimulationDesign(gamma0=1.5, n=100), 0.0) == math.inf
    assert math.isfinite(trimmed_variance(SimulationDesign(gamma0=1.5, n=100), 0.01))


def test_truncated_moments_total():
    design = SimulationDesign(gamma0=2.0, n=100)
    alpha_plus, alpha_minus = truncated_moments(design)
    assert alpha_plus(0.0) + alpha_minus(0.0) == pytest.approx(2.0, rel=1e-6)
    assert alpha_plus(100.0) == pytest.approx(0.0, abs=1e-12)


def test_rate_constant_scaling():
    design = SimulationDesign(gamma0=1.5, n=1000)
    assert rate_constant(design, 8000) / rate_constant(design) == pytest.approx(4.0)
    with pytest.raises(ContractError):
        rate_constant(SimulationDesign(gamma0=2.5, n=1000))


def test_mse_optimal_threshold():
    design = SimulationDesign(gamma0=1.5, n=100)
    b = mse_optimal_threshold(design)
    assert b == pytest.approx(0.01 ** (1.0 / 1.5))
    assert b * b ** 0.5 == pytest.approx(2.0 / (2.0 * 100))


# -- tails --

def test_hill_estimate_on_design():
    data = generate(SimulationDesign(gamma0=1.5, n=100_000, seed=8))
    assert tail_index_hill(data.true_weights, 1000) == pytest.approx(1.5, abs=0.1)


def test_hill_contracts():
    with pytest.raises(ContractError):
        tail_index_hill(np.linspace(0.1, 1.0, 10), 1)
    with pytest.raises(ContractError):
        tail_index_hill(np.linspace(0.1, 1.0, 10), 5)
    with pytest.raises(DiagnosticError):
        tail_index_hill(np.full(10, 0.5), 2)
    with pytest.raises(DiagnosticError):
        tail_index_hill(np.array([0.0, 0.1, 0.2, 0.3, 0.4, 0.5]), 2)


def test_tail_diagnostics_uniform_weights():
    w = (np.arange(10000) + 0.5) / 10000
    report = tail_diagnostics(w)
    assert report['k'] == 100
    assert report['approximately_uniform']
    upper = tail_diagnostics(1.0 - w, orientation=UPPER_TAIL)
    assert upper['tail_index'] == pytest.approx(report['tail_index'], rel=1e-6)


def test_tail_balance_ratio():
    design = SimulationDesign(gamma0=1.5, n=1_000_000, mu1_coefficients=(1.0,), seed=12)
    report = tail_balance_check(design, [10.0, 30.0])
    for row in report['rows']:
        assert row['ratio'] == pytest.approx(report['target'], rel=0.08)


# -- experiments --

def test_regime_thresholds_are_ordered():
    design = SimulationDesign(gamma0=1.5, n=10_000)
    light = regime_threshold(design, "light")
    moderate = regime_threshold(design, "moderate", 1.0)
    heavy = regime_threshold(design, "heavy")
    assert regime_threshold(design, "none") == 0.0
    assert 0 < light < moderate < heavy
    with pytest.raises(ContractError):
        regime_threshold(design, "moderate", 0.0)
    with pytest.raises(ContractError):
        regime_threshold(design, "extreme")


def test_regime_experiment_reports():
    design = SimulationDesign(gamma0=1.5, n=500, seed=2)
    none = regime_experiment(design, "none", 40, reference_size=2000)
    assert {'stable_cf_distance', 'stable_ks'} <= set(none)
    moderate = regime_experiment(design, "moderate", 40, t=1.0)
    assert 'moderate_cf_distance' in moderate
    assert moderate['t'] == pytest.approx(1.0)
    heavy = regime_experiment(design, "heavy", 40)
    assert 0.0 <= heavy['studentized_gaussian_ks'] <= 1.0


def test_regime_experiment_gaussian_design():
    design = SimulationDesign(gamma0=3.0, n=500)
    report = regime_experiment(design, "none", 40)
    assert 'gaussian_ks' in report
    with pytest.raises(ContractError):
        regime_experiment(design, "light", 10)


def test_regime_experiment_is_thread_independent():
    design = SimulationDesign(gamma0=1.5, n=300, seed=5)
    serial = regime_experiment(design, "heavy", 30)
    threaded = regime_experiment(design, "heavy", 30, threads=3)
    assert serial == threaded


def test_bias_variance_slope():
    design = SimulationDesign(gamma0=1.5, n=2000, seed=3)
    report = bias_variance_check(design, [0.001, 0.003, 0.01], 50)
    assert len(report['rows']) == 3
    assert report['log_log_slope'] == pytest.approx(1.0, rel=0.1)
    with pytest.raises(ContractError):
        bias_variance_check(design, [0.0, 0.1], 10)


def test_small_coverage_and_ablation_reports():
    design = SimulationDesign(gamma0=1.5, n=2000, mu1_coefficients=(3.0,), seed=4)
    pipeline = PipelineConfig(weight_source=WEIGHTS_TRUE)
    subsampling = SubsamplingConfig(replications=100)
    report = coverage_experiment(design, pipeline, subsampling, 3)
    assert 0.0 <= report['coverage'] <= 1.0
    assert report['mc_se'] >= 0.0
    ablation = bias_ablation_experiment(design, pipeline, subsampling, 2)
    assert {'with_bias_correction', 'without_bias_correction', 'coverage_loss'} <= set(ablation)


def test_small_selector_bias_and_hill_reports():
    design = SimulationDesign(gamma0=1.5, n=5000, mu1_coefficients=(1.0, 2.0), seed=6)
    assert selector_consistency(design, 5)['target_threshold'] == pytest.approx(mse_optimal_threshold(design))
    report = bias_recovery_experiment(design, 5)
    assert report['relative_error']['count'] <= 5
    with pytest.raises(ContractError):
        bias_recovery_experiment(design, 5, bias=BiasConfig(enabled=False))
    assert hill_experiment(design, 5, k=50)['estimate']['count'] == 5


# -- Monte Carlo acceptance --

@pytest.mark.slow
def test_hill_acceptance():
    design = SimulationDesign(gamma0=1.5, n=100_000, seed=20)
    assert hill_experiment(design, 200, k=1000)['fraction_within_tolerance'] >= 0.95


@pytest.mark.slow
def test_selector_acceptance():
    design = SimulationDesign(gamma0=1.5, n=100_000, seed=21)
    assert selector_consistency(design, 200)['fraction_within_10pct'] >= 0.9


@pytest.mark.slow
def test_bias_recovery_acceptance():
    design = SimulationDesign(gamma0=1.5, n=50_000, mu1_coefficients=(1.0, 2.0), seed=22)
    report = bias_recovery_experiment(design, 200, bandwidth=0.5)
    assert report['fraction_within_tolerance'] >= 0.9


@pytest.mark.slow
def test_bias_recovery_with_selected_bandwidth():
    design = SimulationDesign(gamma0=1.5, n=50_000, mu1_coefficients=(1.0, 2.0), seed=22)
    report = bias_recovery_experiment(design, 200)
    assert report['bandwidth'] is None
    assert report['fraction_within_tolerance'] >= 0.85
    assert report['relative_error']['median'] <= 0.15


@pytest.mark.slow
def test_finite_variance_regime_is_gaussian():
    design = SimulationDesign(gamma0=3.0, n=5000, seed=28)
    report = regime_experiment(design, "none", 1000)
    assert report['gaussian_ks'] < 0.03


@pytest.mark.slow
def test_heavy_regime_studentized_is_gaussian():
    design = SimulationDesign(gamma0=1.5, n=20_000, seed=29)
    report = regime_experiment(design, "heavy", 1000)
    assert report['studentized_gaussian_ks'] < 0.05


@pytest.mark.slow
def test_bias_variance_acceptance():
    design = SimulationDesign(gamma0=1.5, n=5000, seed=23)
    report = bias_variance_check(design, [0.001, 0.003, 0.01], 2000)
    assert all(row['bias_within_3se'] for row in report['rows'])


@pytest.mark.slow
def test_untrimmed_regime_is_stable():
    design = SimulationDesign(gamma0=1.5, n=20_000, seed=24)
    assert regime_experiment(design, "none", 2000)['stable_ks'] < 0.05


@pytest.mark.slow
def test_thin_tail_coverage():
    design = SimulationDesign(gamma0=3.0, n=2000, seed=25)
    pipeline = PipelineConfig(weight_source=WEIGHTS_TRUE)
    report = coverage_experiment(design, pipeline, SubsamplingConfig(replications=500), 300, threads=4)
    assert 0.91 <= report['coverage'] <= 0.99


@pytest.mark.slow
def test_heavy_tail_coverage():
    design = SimulationDesign(gamma0=1.5, n=5000, seed=26)
    pipeline = PipelineConfig(weight_source=WEIGHTS_TRUE)
    report = coverage_experiment(design, pipeline, SubsamplingConfig(replications=500), 300, threads=4)
    assert 0.90 <= report['coverage'] <= 0.98


@pytest.mark.slow
def test_ablation_under_heavy_trimming():
    design = SimulationDesign(gamma0=1.5, n=5000, mu1_coefficients=(1.0, 2.0), seed=27)
    pipeline = PipelineConfig(trimming=TrimmingSpec(s=2.0), weight_source=WEIGHTS_TRUE)
    report = bias_ablation_experiment(design, pipeline, SubsamplingConfig(replications=500), 300, threads=4)
    assert report['coverage_loss'] >= 0.05
