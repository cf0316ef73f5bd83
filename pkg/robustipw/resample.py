"""
m-out-of-n subsampling of the bias-corrected, self-normalised statistic and
the robust confidence interval built from its quantiles.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import stats

from . import propensity
from ._numerics import ordered_map
from .errors import ContractError, IpwError, ResamplingError
from .estimator import PipelineConfig, WEIGHTS_FROM_MODEL, run_pipeline
from .trimming import MODE_FIXED

logger = logging.getLogger(__name__)

DEFAULT_REPLICATIONS = 1000
MIN_REPLICATIONS = 100
MAX_FAILURE_RATE = 0.1
QUANTILE_METHOD = "inverted_cdf"

WARN_REPLICATIONS_FAILED = "replications_failed"
# failure cause for fits with s_n = 0 or a non-finite statistic
DEGENERATE = "degenerate"


def default_subsample_size(n):
    """floor(n / log n)"""
    if n < 3:
        raise ContractError(f"Subsampling needs n >= 3, got {n}")
    return int(math.floor(n / math.log(n)))


@dataclass(frozen=True)
class SubsamplingConfig:
    """Subsample size, replication count and the re-derivation flags

    ``m=None`` means floor(n / log n), resolved against the sample at run time.
    """

    m: Optional[int] = None
    replications: int = DEFAULT_REPLICATIONS
    alpha: float = 0.05
    seed: int = 20240101
    refit_propensity: bool = True
    reselect_threshold: bool = True
    threads: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.replications < MIN_REPLICATIONS:
            raise ContractError(f"At least {MIN_REPLICATIONS} replications required, got {self.replications}")
        if not 0.0 < self.alpha < 1.0:
            raise ContractError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.threads < 1:
            raise ContractError(f"threads must be >= 1, got {self.threads}")
        if self.m is not None and self.m < 2:
            raise ContractError(f"Subsample size must be >= 2, got {self.m}")

    def subsample_size(self, n):
        m = default_subsample_size(n) if self.m is None else self.m
        if not 2 <= m < n:
            raise ContractError(f"Subsample size must satisfy 2 <= m < n; got m={m}, n={n}")
        return m


@dataclass(frozen=True)
class SubsamplingResult:
    statistics: np.ndarray
    failed: int
    q_low: float
    q_high: float
    ci: Tuple[float, float]
    level: float
    m: int
    replications: int
    warnings: Tuple[str, ...] = ()
    failure_causes: Dict[str, int] = field(default_factory=dict)

    @property
    def failure_rate(self):
        return self.failed / self.replications

    def as_dict(self):
        return {
            'm': self.m,
            'replications': self.replications,
            'successful': int(self.statistics.size),
            'failed': self.failed,
            'failure_rate': self.failure_rate,
            'failure_causes': dict(self.failure_causes),
            'q_low': self.q_low,
            'q_high': self.q_high,
            'ci': list(self.ci),
            'level': self.level,
            'warnings': list(self.warnings),
        }


def confidence_interval(theta_bc, s_n, n, q_low, q_high):
    """[theta_bc - q_high * s_n / sqrt(n), theta_bc - q_low * s_n / sqrt(n)]"""
    if q_low > q_high:
        raise ContractError(f"Lower quantile {q_low} exceeds upper quantile {q_high}")
    if s_n < 0 or n < 2:
        raise ContractError(f"Need s_n >= 0 and n >= 2, got s_n={s_n}, n={n}")
    scale = s_n / math.sqrt(n)
    return theta_bc - q_high * scale, theta_bc - q_low * scale


def gaussian_interval(theta_hat, s_n, n, alpha=0.05):
    """Conventional normal-approximation interval theta_hat +/- z * s_n / sqrt(n)"""
    if s_n < 0 or n < 2:
        raise ContractError(f"Need s_n >= 0 and n >= 2, got s_n={s_n}, n={n}")
    half = float(stats.norm.ppf(1.0 - alpha / 2.0)) * s_n / math.sqrt(n)
    return theta_hat - half, theta_hat + half


def _replication_pipeline(pipeline, full, config):
    if config.reselect_threshold:
        return pipeline
    # frozen full-sample threshold
    return replace(pipeline, trimming=replace(pipeline.trimming, mode=MODE_FIXED, b=full.b))


def _one_replication(r, data, pipeline, full, weights, config, m):
    """(T*, None) for replication r, or (None, cause) when the subsample cannot be fitted"""
    rng = np.random.default_rng([config.seed, r])
    indices = np.sort(rng.choice(data.n, size=m, replace=False))
    sub = data.subset(indices)
    sub_weights = None
    if not config.refit_propensity and weights is not None:
        sub_weights = weights[indices]
    bandwidth = None if config.reselect_threshold else full.h
    try:
        result, _ = run_pipeline(sub, pipeline, weights=sub_weights, bandwidth=bandwidth)
    except IpwError as e:
        logger.debug(f"Replication {r} failed: {e}")
        return None, type(e).__name__
    if not (result.s_n > 0 and math.isfinite(result.theta_bc)):
        logger.debug(f"Replication {r} is degenerate (s_n={result.s_n})")
        return None, DEGENERATE
    statistic = (result.theta_bc - full.theta_bc) / (result.s_n / math.sqrt(m))
    if not math.isfinite(statistic):
        return None, DEGENERATE
    return statistic, None


def subsample_statistics(data, pipeline: PipelineConfig, full, config: SubsamplingConfig, weights=None):
    """Subsampling distribution of the Studentised bias-corrected statistic

    Args:
        data: Full sample
        pipeline: Estimation settings reused on every subsample
        full: Full-sample IpwEstimate; its theta_bc centres every replicate
        config: Subsampling settings
        weights: Full-sample weights, used when the propensity model is not refitted

    Returns:
        SubsamplingResult with statistics in replication order
    """
    m = config.subsample_size(data.n)
    if not config.refit_propensity and weights is None and pipeline.weight_source == WEIGHTS_FROM_MODEL:
        raise ContractError("Freezing the propensity model requires the full-sample weights")
    rep_pipeline = _replication_pipeline(pipeline, full, config)
    B = config.replications
    logger.info(f"Subsampling: m={m}, B={B}, threads={config.threads}")

    def task(r):
        return _one_replication(r, data, rep_pipeline, full, weights, config, m)

    outcomes = ordered_map(task, B, threads=config.threads, progress=config.progress, desc="subsampling")

    statistics = np.array([t for t, _ in outcomes if t is not None], dtype=float)
    causes = Counter(cause for _, cause in outcomes if cause is not None)
    failed = B - statistics.size
    if failed > MAX_FAILURE_RATE * B:
        cause, count = causes.most_common(1)[0]
        raise ResamplingError(f"{failed} of {B} subsample replications failed at m={m} "
                              f"(rate {failed / B:.1%}, mostly {cause}: {count}); "
                              f"the subsample is too small for the model")
    warnings = (WARN_REPLICATIONS_FAILED,) if failed else ()
    if failed:
        logger.warning(f"{failed} of {B} subsample replications failed and were skipped: {dict(causes)}")

    q_low, q_high = (float(q) for q in np.quantile(
        statistics, [config.alpha / 2.0, 1.0 - config.alpha / 2.0], method=QUANTILE_METHOD))
    ci = confidence_interval(full.theta_bc, full.s_n, full.n, q_low, q_high)
    statistics.setflags(write=False)
    return SubsamplingResult(
        statistics=statistics, failed=failed, q_low=q_low, q_high=q_high, ci=ci,
        level=1.0 - config.alpha, m=m, replications=B, warnings=warnings,
        failure_causes=dict(causes),
    )


@dataclass(frozen=True)
class InferenceResult:
    """Full-sample estimate, subsampling output and both intervals"""

    estimate: object
    subsampling: SubsamplingResult
    gaussian_ci: Tuple[float, float]
    model: Optional[object] = None
    warnings: Tuple[str, ...] = field(default=())

    @property
    def ci(self):
        return self.subsampling.ci

    def as_dict(self):
        return {
            'estimate': self.estimate.as_dict(),
            'subsampling': self.subsampling.as_dict(),
            'robust_ci': list(self.ci),
            'gaussian_ci': list(self.gaussian_ci),
            'propensity': None if self.model is None else self.model.as_dict(),
            'warnings': list(self.warnings),
        }


def robust_inference(data, pipeline: PipelineConfig, config: SubsamplingConfig, weights=None):
    """Full-sample estimate followed by subsampling and the robust interval"""
    full, model = run_pipeline(data, pipeline, weights=weights)
    logger.info(f"Full sample: b={full.b:.6g}, bandwidth={full.h}, {full.n_trimmed} trimmed, "
                f"theta_hat={full.theta_hat:.6g}, bias_hat={full.bias_hat:.6g}")
    if weights is None and not config.refit_propensity:
        weights = data.true_weights if model is None else propensity.predict(model, data.x)
    sub = subsample_statistics(data, pipeline, full, config, weights=weights)
    gauss = gaussian_interval(full.theta_hat, full.s_n, full.n, config.alpha)
    warnings = tuple(dict.fromkeys(full.warnings + sub.warnings))
    logger.info(f"Robust {sub.level:.0%} interval [{sub.ci[0]:.6g}, {sub.ci[1]:.6g}] "
                f"around theta_bc={full.theta_bc:.6g}")
    return InferenceResult(estimate=full, subsampling=sub, gaussian_ci=gauss, model=model, warnings=warnings)