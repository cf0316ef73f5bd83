"""
Trimmed IPW point estimators (population mean and ATT), the self-normaliser,
and the pipeline assembling bias-corrected estimates.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from . import propensity
from ._numerics import LOWER_TAIL, UPPER_TAIL, orient
from .biascorrect import (
    DEFAULT_BANDWIDTH_C, DEFAULT_ORDER, MAX_ORDER, TARGET_Y,
    estimate_bias, local_group, local_poly_fit, rate_statistic, select_bandwidth,
)
from .errors import ConfigurationError, ContractError, EstimationError
from .trimming import MODE_AUTO, MODE_FIXED, TrimmingSpec, mu_ratio, select_threshold, trimmed_count

logger = logging.getLogger(__name__)

MEAN = "mean"
ATT = "att"
ESTIMANDS = (MEAN, ATT)

WEIGHTS_FROM_MODEL = "model"
WEIGHTS_TRUE = "true"

WARN_BANDWIDTH_CAPPED = "bandwidth_capped"
WARN_ORDER_REDUCED = "order_reduced"
WARN_BANDWIDTH_RAISED = "bandwidth_raised_to_threshold"
WARN_RATE_CONDITION = "rate_condition"


def orientation_for(estimand):
    if estimand == MEAN:
        return LOWER_TAIL
    if estimand == ATT:
        return UPPER_TAIL
    raise ConfigurationError(f"Unknown estimand '{estimand}'; expected one of {ESTIMANDS}")


@dataclass(frozen=True)
class BiasConfig:
    enabled: bool = True
    order: int = DEFAULT_ORDER
    bandwidth_c: float = DEFAULT_BANDWIDTH_C

    def __post_init__(self):
        if self.order not in range(MAX_ORDER + 1):
            raise ConfigurationError(f"Polynomial order must be in 0..{MAX_ORDER}, got {self.order}")
        if self.bandwidth_c <= 0:
            raise ConfigurationError(f"Bandwidth constant must be positive, got {self.bandwidth_c}")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to turn a Dataset into an IpwEstimate"""

    model_kind: str = propensity.LOGIT
    estimand: str = MEAN
    trimming: TrimmingSpec = field(default_factory=TrimmingSpec)
    bias: BiasConfig = field(default_factory=BiasConfig)
    weight_source: str = WEIGHTS_FROM_MODEL
    tolerance: float = propensity.DEFAULT_TOLERANCE
    max_iterations: int = propensity.DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if self.model_kind not in propensity.MODEL_KINDS:
            raise ConfigurationError(f"Unknown model '{self.model_kind}'")
        if self.weight_source not in (WEIGHTS_FROM_MODEL, WEIGHTS_TRUE):
            raise ConfigurationError(f"Unknown weight source '{self.weight_source}'")
        orientation = orientation_for(self.estimand)
        if self.trimming.orientation != orientation:
            object.__setattr__(self, 'trimming', replace(self.trimming, orientation=orientation))

    @property
    def orientation(self):
        return orientation_for(self.estimand)


@dataclass(frozen=True)
class IpwEstimate:
    """Point estimate, threshold, estimated bias and self-normaliser"""

    estimand: str
    theta_hat: float
    b: float
    bias_hat: float
    theta_bc: float
    s_n: float
    n_trimmed: int
    n: int
    n_treated: int = 0
    h: Optional[float] = None
    order: Optional[int] = None
    mu1: Optional[float] = None
    mu2: Optional[float] = None
    orientation: str = LOWER_TAIL
    warnings: Tuple[str, ...] = ()

    @property
    def threshold_on_weights(self):
        """The threshold expressed on the e-scale (1 - b for upper-tail trimming)"""
        return self.b if self.orientation == LOWER_TAIL else 1.0 - self.b

    def as_dict(self):
        return {
            'estimand': self.estimand,
            'theta_hat': self.theta_hat,
            'b': self.b,
            'threshold_on_weights': self.threshold_on_weights,
            'bias_hat': self.bias_hat,
            'theta_bc': self.theta_bc,
            's_n': self.s_n,
            'n_trimmed': self.n_trimmed,
            'n': self.n,
            'n_treated': self.n_treated,
            'bandwidth': self.h,
            'order': self.order,
            'mu1': self.mu1,
            'mu2': self.mu2,
            'orientation': self.orientation,
            'warnings': list(self.warnings),
        }


def _check_inputs(data, weights, b):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != data.y.shape:
        raise ContractError(f"{weights.size} weights for {data.n} observations")
    if not 0.0 <= b < 1.0:
        raise ContractError(f"Threshold must lie in [0, 1), got {b}")
    return weights


def mean_terms(data, weights, b):
    """d_i y_i / e_i * 1{e_i >= b}"""
    weights = _check_inputs(data, weights, b)
    if np.any(weights <= 0) or np.any(weights > 1):
        raise ContractError("Weights must lie in (0, 1]")
    kept = (data.d == 1) & (weights >= b)
    terms = np.zeros(data.n)
    terms[kept] = data.y[kept] / weights[kept]
    return terms


def att_terms(data, weights, b):
    """d_i y_i - e_i/(1-e_i) (1-d_i) y_i 1{1-e_i >= b}"""
    weights = _check_inputs(data, weights, b)
    if np.any(weights < 0) or np.any(weights > 1):
        raise ContractError("Weights must lie in [0, 1]")
    kept = (data.d == 0) & (1.0 - weights >= b)
    if np.any(weights[kept] >= 1):
        raise ContractError("Comparison units with weight 1 cannot be reweighted; trim them")
    terms = np.where(data.d == 1, data.y, 0.0)
    terms[kept] -= weights[kept] / (1.0 - weights[kept]) * data.y[kept]
    return terms


def ipw_mean(data, weights, b):
    """(1/n) sum d_i y_i / e_i over the kept set {e_i >= b}"""
    return float(np.mean(mean_terms(data, weights, b)))


def att(data, weights, b):
    """ATT estimate with comparison units trimmed where 1 - e_i < b"""
    n_treated = data.treated_count
    if n_treated < 1:
        raise EstimationError("ATT needs at least one treated unit")
    return float(np.sum(att_terms(data, weights, b)) / n_treated)


def self_normalizer(data, weights, b, theta_hat, estimand=MEAN):
    """Sample standard deviation (n - 1 divisor) of the trimmed summands around theta_hat

    ATT summands are rescaled by n / n1 so that their mean is the estimate.
    """
    if data.n < 2:
        raise ContractError("The self-normaliser needs at least two observations")
    if estimand == MEAN:
        terms = mean_terms(data, weights, b)
    elif estimand == ATT:
        if data.treated_count < 1:
            raise EstimationError("ATT needs at least one treated unit")
        terms = att_terms(data, weights, b) * (data.n / data.treated_count)
    else:
        raise ConfigurationError(f"Unknown estimand '{estimand}'")
    return float(np.sqrt(np.sum((terms - theta_hat) ** 2) / (data.n - 1)))


def point_estimate(data, weights, b, estimand=MEAN):
    if estimand == MEAN:
        return ipw_mean(data, weights, b)
    if estimand == ATT:
        return att(data, weights, b)
    raise ConfigurationError(f"Unknown estimand '{estimand}'")


def estimate(data, model, estimand, trimming, bias, weights=None, bandwidth=None):
    """Full point-estimation pipeline

    Predicts weights (unless given), selects the bandwidth and threshold,
    estimates the trimming bias and assembles an IpwEstimate.
    """
    orientation = orientation_for(estimand)
    if trimming.orientation != orientation:
        trimming = replace(trimming, orientation=orientation)
    if weights is None:
        if model is not None:
            weights = propensity.predict(model, data.x)
        elif data.true_weights is not None:
            weights = data.true_weights
        else:
            raise ContractError("No weights: supply a fitted model, explicit weights or true weights")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != data.y.shape:
        raise ContractError(f"{weights.size} weights for {data.n} observations")

    p = bias.order
    warnings = []
    h = mu1 = mu2 = None

    if bandwidth is not None:
        if not 0.0 < bandwidth <= 1.0:
            raise ContractError(f"Bandwidth must lie in (0, 1], got {bandwidth}")
        h = float(bandwidth)
    elif bias.enabled or trimming.mode == MODE_AUTO:
        h = select_bandwidth(weights, p, bias.bandwidth_c, orientation)
        if rate_statistic(weights, 1.0, p, orientation) < bias.bandwidth_c:
            warnings.append(WARN_BANDWIDTH_CAPPED)

    if trimming.mode == MODE_AUTO:
        mu1, mu2 = mu_ratio(data, weights, h, p, orientation)
        b = select_threshold(weights, trimming.s, mu1, mu2, orientation)
    elif trimming.mode == MODE_FIXED:
        b = trimming.b
    else:
        b = 0.0

    theta_hat = point_estimate(data, weights, b, estimand)
    normaliser = data.n if estimand == MEAN else data.treated_count
    n_trimmed = trimmed_count(weights, b, local_group(data, orientation), orientation)

    bias_hat = 0.0
    order = p if bias.enabled else None
    if bias.enabled and np.any(orient(weights, orientation) < b):
        window = h
        if b > h:
            window = b
            warnings.append(WARN_BANDWIDTH_RAISED)
            logger.warning(f"Threshold {b:.4g} exceeds bandwidth {h:.4g}; widening the local window to the threshold")
        fit = local_poly_fit(data, weights, window, p, TARGET_Y, orientation)
        if fit.order_reduced:
            warnings.append(WARN_ORDER_REDUCED)
        order = fit.order
        bias_hat = estimate_bias(fit, weights, b, normaliser, orientation)

    if b > 0 and rate_statistic(weights, b, p, orientation) > 1.0:
        warnings.append(WARN_RATE_CONDITION)

    s_n = self_normalizer(data, weights, b, theta_hat, estimand)
    result = IpwEstimate(
        estimand=estimand,
        theta_hat=theta_hat,
        b=float(b),
        bias_hat=bias_hat,
        theta_bc=theta_hat - bias_hat,
        s_n=s_n,
        n_trimmed=n_trimmed,
        n=data.n,
        n_treated=data.treated_count,
        h=h,
        order=order,
        mu1=mu1,
        mu2=mu2,
        orientation=orientation,
        warnings=tuple(warnings),
    )
    logger.debug(f"{estimand} estimate: theta_hat={theta_hat:.6g}, b={b:.6g}, "
                 f"trimmed={n_trimmed}, bias_hat={bias_hat:.6g}")
    return result


def fit_weights(data, config):
    """Fitted model and weights for a pipeline configuration"""
    if config.weight_source == WEIGHTS_TRUE:
        if data.true_weights is None:
            raise ContractError("Pipeline asks for true weights but the dataset has none")
        return None, data.true_weights
    model = propensity.fit(data, config.model_kind, tol=config.tolerance, max_iter=config.max_iterations)
    return model, propensity.predict(model, data.x)


def run_pipeline(data, config, weights=None, bandwidth=None):
    """Fit the weight model (unless weights are given) and estimate

    Returns:
        (IpwEstimate, PropensityModel or None)
    """
    model = None
    if weights is None:
        model, weights = fit_weights(data, config)
    result = estimate(data, model, config.estimand, config.trimming, config.bias,
                      weights=weights, bandwidth=bandwidth)
    return result, model
