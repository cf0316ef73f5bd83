"""
Stable limit laws of the untrimmed and moderately trimmed IPW estimator:
closed-form and Levy-Khintchine characteristic functions and a sampler.
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from ..errors import ContractError, NumericalError

logger = logging.getLogger(__name__)

QUAD_EPSREL = 1e-8
QUAD_EPSABS = 1e-10
QUAD_LIMIT = 200
# below this |zeta * x| the integrand is replaced by its Taylor expansion
SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class StableParams:
    """Index gamma0 and the tail masses alpha_plus(0), alpha_minus(0)

    gamma0 = 2 is accepted as the Gaussian endpoint.
    """

    gamma0: float
    alpha_plus: float = 1.0
    alpha_minus: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.gamma0 <= 2.0:
            raise ContractError(f"Stable index must lie in (1, 2], got {self.gamma0}")
        if self.alpha_plus < 0 or self.alpha_minus < 0 or self.alpha_plus + self.alpha_minus <= 0:
            raise ContractError("Tail masses must be nonnegative and not both zero")

    @property
    def skew(self):
        return (self.alpha_plus - self.alpha_minus) / (self.alpha_plus + self.alpha_minus)

    @property
    def log_cf_constant(self):
        """Gamma(3 - g) / (g (g - 1))"""
        g = self.gamma0
        return gamma_fn(3.0 - g) / (g * (g - 1.0))

    @property
    def scale(self):
        """Scale sigma of the equivalent S1 parameterisation"""
        g = self.gamma0
        return (self.log_cf_constant * -math.cos(g * math.pi / 2.0)) ** (1.0 / g)


def stable_log_cf(zeta, params):
    g = params.gamma0
    zeta = np.asarray(zeta, dtype=float)
    bracket = -math.cos(g * math.pi / 2.0) + 1j * params.skew * np.sign(zeta) * math.sin(g * math.pi / 2.0)
    return -np.abs(zeta) ** g * params.log_cf_constant * bracket


def stable_cf(zeta, params):
    """Characteristic function of the stable limit; vectorised over zeta"""
    value = np.exp(stable_log_cf(zeta, params))
    return complex(value) if value.ndim == 0 else value


def stable_sample(params, count, seed):
    """Chambers-Mallows-Stuck draws matching stable_cf

    Args:
        params: StableParams
        count: Number of draws
        seed: Seed (or seed sequence) for numpy's default_rng

    Returns:
        float array of length count
    """
    if count < 1:
        raise ContractError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    a = params.gamma0
    beta = params.skew
    v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=count)
    w = rng.exponential(size=count)

    tan_term = beta * math.tan(math.pi * a / 2.0)
    shift = math.atan(tan_term) / a
    stretch = (1.0 + tan_term ** 2) ** (1.0 / (2.0 * a))
    x = (stretch * np.sin(a * (v + shift)) / np.cos(v) ** (1.0 / a)
         * (np.cos(v - a * (v + shift)) / w) ** ((1.0 - a) / a))
    return params.scale * x


def _quad(func, lower, upper, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.quad(func, lower, upper, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                          limit=QUAD_LIMIT, **kwargs)
        except integrate.IntegrationWarning as e:
            raise NumericalError(f"Quadrature on [{lower}, {upper}] did not converge: {e}") from None
    if not math.isfinite(value):
        raise NumericalError(f"Quadrature on [{lower}, {upper}] returned {value}")
    return value


def _cos_kernel(zeta, u):
    """(cos(zeta u) - 1) / u**2"""
    z = zeta * u
    if abs(z) < SERIES_CUTOFF:
        return -zeta ** 2 / 2.0 + zeta ** 4 * u ** 2 / 24.0
    return (math.cos(z) - 1.0) / u ** 2


def _sin_kernel(zeta, u):
    """(sin(zeta u) - zeta u) / u**2"""
    z = zeta * u
    if abs(z) < SERIES_CUTOFF:
        return -zeta ** 3 * u / 6.0
    return (math.sin(z) - z) / u ** 2


def levy_cf_moderate(zeta, t, gamma0, alpha_plus_fn, alpha_minus_fn):
    """Characteristic function of the moderately trimmed limit law

    The Levy measure has density K |x|^(1-g) alpha_plus(t x) on x >= 0 and
    K |x|^(1-g) alpha_minus(t x) on x < 0, K = (2-g) / (alpha_plus(0) + alpha_minus(0)).
    At t = 0 this reduces to stable_cf.
    """
    if t < 0:
        raise ContractError(f"t must be nonnegative, got {t}")
    if not 1.0 < gamma0 < 2.0:
        raise ContractError(f"Index must lie in (1, 2), got {gamma0}")
    if zeta == 0:
        return complex(1.0)
    total = alpha_plus_fn(0.0) + alpha_minus_fn(0.0)
    if total <= 0:
        raise ContractError("alpha_plus(0) + alpha_minus(0) must be positive")
    K = (2.0 - gamma0) / total

    def m_plus(u):
        return K * u ** (1.0 - gamma0) * alpha_plus_fn(t * u)

    def m_minus(u):
        return K * u ** (1.0 - gamma0) * alpha_minus_fn(-t * u)

    def even(u):
        return m_plus(u) + m_minus(u)

    def odd(u):
        return m_plus(u) - m_minus(u)

    sign = 1.0 if zeta > 0 else -1.0
    freq = abs(zeta)

    real = _quad(lambda u: _cos_kernel(zeta, u) * even(u), 0.0, 1.0)
    real += _quad(lambda u: even(u) / u ** 2, 1.0, np.inf, weight='cos', wvar=freq)
    real -= _quad(lambda u: even(u) / u ** 2, 1.0, np.inf)

    imag = _quad(lambda u: _sin_kernel(zeta, u) * odd(u), 0.0, 1.0)
    imag += sign * _quad(lambda u: odd(u) / u ** 2, 1.0, np.inf, weight='sin', wvar=freq)
    imag -= zeta * _quad(lambda u: odd(u) / u, 1.0, np.inf)

    return complex(np.exp(real + 1j * imag))


def empirical_cf(sample, zeta):
    """Sample average of exp(i zeta X) on a grid of zeta"""
    sample = np.asarray(sample, dtype=float)
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    return np.exp(1j * np.outer(zeta, sample)).mean(axis=1)


def cf_distance(sample, reference_cf, zeta_grid):
    """sup over the grid of |empirical CF - reference CF|"""
    empirical = empirical_cf(sample, zeta_grid)
    reference = np.array([reference_cf(z) for z in zeta_grid])
    return float(np.max(np.abs(empirical - reference)))
