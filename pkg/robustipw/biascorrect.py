"""
Local polynomial estimation of the trimming bias and the bandwidth rule.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from ._numerics import LOWER_TAIL, UPPER_TAIL, ORIENTATIONS, empirical_cdf, orient, solve_power_cdf
from .errors import BandwidthError, ContractError

logger = logging.getLogger(__name__)

TARGET_Y = "y"
TARGET_Y_SQUARED = "y_squared"
MAX_ORDER = 3
DEFAULT_ORDER = 1
DEFAULT_BANDWIDTH_C = 1.0


@dataclass(frozen=True, eq=False)
class LocalPolyFit:
    """Uniform-kernel polynomial fit on the window [0, bandwidth] of the oriented weight axis"""

    coefficients: np.ndarray
    order: int
    bandwidth: float
    n_local: int
    orientation: str = LOWER_TAIL
    target: str = TARGET_Y
    requested_order: int = DEFAULT_ORDER

    @property
    def window(self):
        return (0.0, self.bandwidth)

    @property
    def intercept(self):
        return float(self.coefficients[0])

    @property
    def order_reduced(self):
        return self.order < self.requested_order

    def __call__(self, w):
        """Fitted polynomial at oriented weight(s) w"""
        return P.polyval(w, self.coefficients)


def local_group(data, orientation):
    """Treated units carry the lower tail, comparison units the upper tail"""
    return data.d == 1 if orientation == LOWER_TAIL else data.d == 0


def local_poly_fit(data, weights, h, p=DEFAULT_ORDER, target=TARGET_Y, orientation=LOWER_TAIL):
    """Least-squares polynomial of order p in the oriented weight, on the local window

    Uses the d=1 subsample (lower tail) or the d=0 subsample regressed on 1 - e
    (upper tail). The design is rescaled to [0, 1] and solved by SVD; a
    rank-deficient design drops to the highest order it supports.
    """
    if not 0.0 < h <= 1.0:
        raise ContractError(f"Bandwidth must lie in (0, 1], got {h}")
    if p not in range(MAX_ORDER + 1):
        raise ContractError(f"Polynomial order must be in 0..{MAX_ORDER}, got {p}")
    if orientation not in ORIENTATIONS:
        raise ContractError(f"Unknown orientation '{orientation}'")
    if target not in (TARGET_Y, TARGET_Y_SQUARED):
        raise ContractError(f"Unknown regression target '{target}'")

    w = orient(weights, orientation)
    if w.shape != data.y.shape:
        raise ContractError(f"{w.size} weights for {data.n} observations")
    mask = local_group(data, orientation) & (w <= h)
    n_local = int(mask.sum())
    if n_local < p + 2:
        raise BandwidthError(f"Only {n_local} points inside the window [0, {h:.4g}]; "
                             f"order {p} needs at least {p + 2}; try a larger bandwidth")

    response = data.y[mask] if target == TARGET_Y else data.y[mask] ** 2
    u = w[mask] / h
    for order in range(p, -1, -1):
        vander = np.vander(u, order + 1, increasing=True)
        coef, _, rank, _ = np.linalg.lstsq(vander, response, rcond=None)
        if rank == order + 1:
            break
        logger.warning(f"Local polynomial design is singular at order {order}; reducing order")

    coefficients = coef / h ** np.arange(order + 1)
    return LocalPolyFit(
        coefficients=coefficients,
        order=order,
        bandwidth=float(h),
        n_local=n_local,
        orientation=orientation,
        target=target,
        requested_order=p,
    )


def estimate_bias(fit, weights, b, n, orientation=None):
    """Estimated trimming bias from the fitted polynomial

    Lower tail: -(1/n) * sum of fitted values over {e < b}.
    Upper tail (ATT): +(1/n) * sum of e * fitted(1 - e) over {1 - e < b}, with n = n1.
    """
    orientation = orientation or fit.orientation
    if b > fit.bandwidth:
        raise ContractError(f"Threshold {b:.6g} exceeds the bandwidth {fit.bandwidth:.6g}; refusing to extrapolate")
    if n < 1:
        raise ContractError("Normaliser n must be positive")

    w = orient(weights, orientation)
    trimmed = w < b
    if not trimmed.any():
        return 0.0
    fitted = fit(w[trimmed])
    if orientation == LOWER_TAIL:
        return -float(np.sum(fitted)) / n
    return float(np.sum((1.0 - w[trimmed]) * fitted)) / n


def rate_statistic(weights, x, p, orientation=LOWER_TAIL):
    """n * x**(2p+3) * F(x) on the oriented weight axis"""
    w = np.sort(orient(weights, orientation))
    return w.size * x ** (2 * p + 3) * float(empirical_cdf(w, x))


def select_bandwidth(weights, p=DEFAULT_ORDER, c=DEFAULT_BANDWIDTH_C, orientation=LOWER_TAIL):
    """Smallest h in (0, 1] with n * h**(2p+3) * F(h) >= c, capped at 1"""
    if c <= 0:
        raise ContractError(f"Bandwidth constant must be positive, got {c}")
    w = orient(weights, orientation)
    h = solve_power_cdf(w, 2 * p + 3, c / w.size)
    if h is None:
        logger.warning(f"Bandwidth equation unattainable below 1 (c={c}, p={p}); capping at 1")
        return 1.0
    logger.debug(f"Selected bandwidth h={h:.6g} (p={p}, c={c})")
    return float(h)


__all__ = [
    'LocalPolyFit', 'local_poly_fit', 'estimate_bias', 'select_bandwidth', 'rate_statistic',
    'TARGET_Y', 'TARGET_Y_SQUARED', 'LOWER_TAIL', 'UPPER_TAIL',
]
