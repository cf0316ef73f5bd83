"""
Simulation designs with a known tail index and closed-form truth.

Weights are drawn as e = U**(1/(gamma0-1)), so P[e <= x] = x**(gamma0-1)
exactly and every bias, variance and threshold has a closed form.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import stats

from ..dataset import Dataset
from ..errors import ConfigurationError, ContractError
from .stable import StableParams

logger = logging.getLogger(__name__)

NORMAL = "normal"
SHIFTED_EXPONENTIAL = "shifted_exponential"
OUTCOME_FAMILIES = (NORMAL, SHIFTED_EXPONENTIAL)

WEIGHTS_ORACLE = "oracle"
WEIGHTS_LOGIT = "logit"
WEIGHT_MODES = (WEIGHTS_ORACLE, WEIGHTS_LOGIT)


@dataclass(frozen=True)
class SimulationDesign:
    """Polynomial-tail design

    mu1_coefficients are in increasing order: mu1(e) = c0 + c1 e + c2 e^2 + ...
    The outcome is mu1(e) plus noise with standard deviation noise_sd.
    """

    gamma0: float
    n: int
    mu1_coefficients: Tuple[float, ...] = (1.0,)
    noise_sd: float = 1.0
    outcome_family: str = NORMAL
    seed: int = 0
    weight_mode: str = WEIGHTS_ORACLE

    def __post_init__(self):
        if self.gamma0 <= 1.0:
            raise ConfigurationError(f"Tail index must exceed 1, got {self.gamma0}")
        if self.n < 2:
            raise ConfigurationError(f"Sample size must be at least 2, got {self.n}")
        if not self.mu1_coefficients:
            raise ConfigurationError("mu1 needs at least one coefficient")
        if self.noise_sd < 0:
            raise ConfigurationError(f"noise_sd must be nonnegative, got {self.noise_sd}")
        if self.outcome_family not in OUTCOME_FAMILIES:
            raise ConfigurationError(f"Unknown outcome family '{self.outcome_family}'")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigurationError(f"Unknown weight mode '{self.weight_mode}'")
        object.__setattr__(self, 'mu1_coefficients', tuple(float(c) for c in self.mu1_coefficients))

    @property
    def theta0(self):
        """Integral of mu1 against the density (g-1) e^(g-2)"""
        g = self.gamma0
        return sum(c * (g - 1.0) / (g - 1.0 + j) for j, c in enumerate(self.mu1_coefficients))

    @property
    def mu2_coefficients(self):
        """E[Y^2 | e] = mu1(e)^2 + noise_sd^2"""
        coefs = P.polymul(self.mu1_coefficients, self.mu1_coefficients)
        coefs = np.array(coefs, dtype=float)
        coefs[0] += self.noise_sd ** 2
        return tuple(coefs)

    def mu1(self, e):
        return P.polyval(e, self.mu1_coefficients)

    def weight_cdf(self, x):
        return np.clip(x, 0.0, 1.0) ** (self.gamma0 - 1.0)

    def describe(self):
        return {
            'gamma0': self.gamma0,
            'n': self.n,
            'mu1_coefficients': list(self.mu1_coefficients),
            'noise_sd': self.noise_sd,
            'outcome_family': self.outcome_family,
            'seed': self.seed,
            'weight_mode': self.weight_mode,
            'theta0': self.theta0,
        }


def _noise(design, rng, size):
    if design.outcome_family == NORMAL:
        return design.noise_sd * rng.standard_normal(size)
    return design.noise_sd * (rng.exponential(size=size) - 1.0)


def generate(design, replication=None):
    """Draw one dataset

    The generator is seeded from (seed,) or (seed, replication), so each
    replication has its own reproducible stream.
    """
    entropy = [design.seed] if replication is None else [design.seed, replication]
    rng = np.random.default_rng(entropy)
    n = design.n
    u = 1.0 - rng.random(n)
    e = u ** (1.0 / (design.gamma0 - 1.0))
    d = (rng.random(n) < e).astype(np.int8)
    y = design.mu1(e) + _noise(design, rng, n)

    if design.weight_mode == WEIGHTS_ORACLE:
        return Dataset(y=y, d=d, x=e.reshape(-1, 1), covariate_names=("e",), true_weights=e)
    e = np.minimum(e, np.nextafter(1.0, 0.0))
    index = np.log(e) - np.log1p(-e)
    return Dataset(y=y, d=d, x=index.reshape(-1, 1), covariate_names=("index",), true_weights=e)


def outcome_distribution(design):
    """Outcome law as the weight tends to zero, as a frozen scipy distribution"""
    c0 = design.mu1_coefficients[0]
    if design.noise_sd == 0:
        raise ContractError("A degenerate outcome has no continuous tail moments")
    if design.outcome_family == NORMAL:
        return stats.norm(loc=c0, scale=design.noise_sd)
    return stats.expon(loc=c0 - design.noise_sd, scale=design.noise_sd)


def truncated_moments(design):
    """alpha_plus(x) = E|Y|^g 1{Y > x} and alpha_minus(x) = E|Y|^g 1{Y < x}

    Returns the two functions, evaluated by quadrature against the outcome law.
    """
    dist = outcome_distribution(design)
    g = design.gamma0
    lower, upper = dist.support()

    def power(y):
        return abs(y) ** g

    def alpha_plus(x):
        if x >= upper:
            return 0.0
        return float(dist.expect(power, lb=max(x, lower), ub=upper))

    def alpha_minus(x):
        if x <= lower:
            return 0.0
        return float(dist.expect(power, lb=lower, ub=min(x, upper)))

    return alpha_plus, alpha_minus


def stable_params(design):
    """StableParams of the untrimmed limit for designs with gamma0 <= 2"""
    alpha_plus, alpha_minus = truncated_moments(design)
    return StableParams(gamma0=design.gamma0, alpha_plus=alpha_plus(0.0), alpha_minus=alpha_minus(0.0))


def rate_constant(design, n=None):
    """a_n = (kappa n)^(1/g), kappa = (g-1)(alpha_plus(0) + alpha_minus(0)) / (2-g)"""
    g = design.gamma0
    if not 1.0 < g < 2.0:
        raise ContractError(f"The stable rate needs 1 < gamma0 < 2, got {g}")
    n = design.n if n is None else n
    alpha_plus, alpha_minus = truncated_moments(design)
    kappa = (g - 1.0) * (alpha_plus(0.0) + alpha_minus(0.0)) / (2.0 - g)
    return (kappa * n) ** (1.0 / g)


def trimming_bias(design, b):
    """-integral_0^b mu1(e) (g-1) e^(g-2) de"""
    if not 0.0 <= b <= 1.0:
        raise ContractError(f"Threshold must lie in [0, 1], got {b}")
    g = design.gamma0
    return -sum(c * (g - 1.0) / (g - 1.0 + j) * b ** (g - 1.0 + j)
                for j, c in enumerate(design.mu1_coefficients))


def trimmed_variance(design, b):
    """Variance of one summand D Y / e * 1{e >= b}; infinite when it diverges"""
    if not 0.0 <= b < 1.0:
        raise ContractError(f"Threshold must lie in [0, 1), got {b}")
    g = design.gamma0
    second = 0.0
    for k, c in enumerate(design.mu2_coefficients):
        if c == 0:
            continue
        power = g - 2.0 + k
        if b == 0 and power <= 0:
            return math.inf
        if power == 0:
            integral = -math.log(b)
        else:
            integral = (1.0 - b ** power) / power
        second += c * (g - 1.0) * integral
    mean = design.theta0 + trimming_bias(design, b)
    return second - mean ** 2


def limit_mu(design):
    """mu1(0) and mu2(0)"""
    return design.mu1_coefficients[0], design.mu2_coefficients[0]


def mse_optimal_threshold(design, s=1.0, n=None):
    """b solving b^s P[e <= b] = mu2(0) / (2 n mu1(0)^2) in closed form"""
    mu1, mu2 = limit_mu(design)
    if mu1 == 0:
        raise ContractError("The MSE-optimal threshold needs mu1(0) != 0")
    n = design.n if n is None else n
    ratio = mu2 / (2.0 * n * mu1 ** 2)
    return ratio ** (1.0 / (s + design.gamma0 - 1.0))
