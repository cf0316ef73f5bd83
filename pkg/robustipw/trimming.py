"""
Data-driven trimming-threshold selection: the empirical bias/variance balance
b^s * F(b) = mu2 / (2 n mu1^2), for lower-tail (mean) and upper-tail (ATT) trimming.
"""
import re
import logging
from dataclasses import dataclass

import numpy as np

from ._numerics import LOWER_TAIL, UPPER_TAIL, ORIENTATIONS, orient, solve_power_cdf
from .biascorrect import TARGET_Y, TARGET_Y_SQUARED, local_poly_fit
from .errors import ConfigurationError, ContractError, ThresholdError

logger = logging.getLogger(__name__)

MODE_NONE = "none"
MODE_FIXED = "fixed"
MODE_AUTO = "auto"
TRIM_MODES = (MODE_NONE, MODE_FIXED, MODE_AUTO)

MU2_FLOOR = 1e-12


@dataclass(frozen=True)
class TrimmingSpec:
    """How the trimming threshold is chosen

    ``s = 1`` targets the MSE-optimal threshold; s < 1 trims asymptotically
    less and s > 1 more.
    """

    mode: str = MODE_AUTO
    b: float = 0.0
    s: float = 1.0
    orientation: str = LOWER_TAIL

    def __post_init__(self):
        if self.mode not in TRIM_MODES:
            raise ConfigurationError(f"Unknown trimming mode '{self.mode}'")
        if self.mode == MODE_FIXED and not 0.0 <= self.b < 1.0:
            raise ConfigurationError(f"Fixed threshold must lie in [0, 1), got {self.b}")
        if self.s <= 0:
            raise ConfigurationError(f"Exponent s must be positive, got {self.s}")
        if self.orientation not in ORIENTATIONS:
            raise ConfigurationError(f"Unknown orientation '{self.orientation}'")

    @classmethod
    def parse(cls, text, orientation=LOWER_TAIL):
        """Parse ``none``, ``fixed=<b>``, ``auto`` or ``auto:s=<s>``"""
        text = text.strip().lower()
        if text == MODE_NONE:
            return cls(mode=MODE_NONE, orientation=orientation)
        match = re.fullmatch(r"fixed=([0-9.eE+-]+)", text)
        if match:
            return cls(mode=MODE_FIXED, b=float(match.group(1)), orientation=orientation)
        match = re.fullmatch(r"auto(?::s=([0-9.eE+-]+))?", text)
        if match:
            s = float(match.group(1)) if match.group(1) else 1.0
            return cls(mode=MODE_AUTO, s=s, orientation=orientation)
        raise ConfigurationError(f"Cannot parse trimming option '{text}'; use none, fixed=<b>, auto or auto:s=<s>")

    def describe(self):
        if self.mode == MODE_FIXED:
            return f"fixed={self.b:g}"
        if self.mode == MODE_AUTO:
            return f"auto:s={self.s:g}"
        return MODE_NONE


def balance_target(n, mu1, mu2):
    """Right-hand side R = mu2 / (2 n mu1^2) of the balance equation"""
    return mu2 / (2.0 * n * mu1 ** 2)


def select_threshold(weights, s, mu1, mu2, orientation=LOWER_TAIL):
    """Smallest root b of b^s * F(b) = mu2 / (2 n mu1^2) on the oriented weight axis

    Raises ThresholdError when even b = 1 cannot reach the target.
    """
    if mu1 == 0:
        raise ThresholdError("mu1 estimate is zero; the balance equation is undefined")
    if not mu2 > 0:
        raise ContractError(f"mu2 must be positive, got {mu2}")
    if s <= 0:
        raise ContractError(f"Exponent s must be positive, got {s}")
    w = orient(weights, orientation)
    if w.size == 0:
        raise ContractError("No weights supplied")

    target = balance_target(w.size, mu1, mu2)
    b = solve_power_cdf(w, s, target)
    if b is None:
        raise ThresholdError(
            f"Trimming equation unsolvable: target {target:.4g} exceeds what trimming every unit "
            f"achieves; use a fixed threshold instead"
        )
    logger.debug(f"Selected threshold b={b:.6g} (s={s}, R={target:.4g})")
    return float(b)


def mu_ratio(data, weights, h, p, orientation=LOWER_TAIL):
    """Intercepts of local polynomial fits of y and y^2 near the hazardous tail

    Returns (mu1, mu2) with mu2 floored at mu1^2 + 1e-12.
    """
    mu1 = local_poly_fit(data, weights, h, p, TARGET_Y, orientation).intercept
    mu2 = local_poly_fit(data, weights, h, p, TARGET_Y_SQUARED, orientation).intercept
    return mu1, max(mu2, mu1 ** 2 + MU2_FLOOR)


def trimmed_count(weights, b, group, orientation=LOWER_TAIL):
    """Units of the weighted group whose oriented weight falls below b"""
    return int(np.sum(group & (orient(weights, orientation) < b)))


__all__ = [
    'TrimmingSpec', 'select_threshold', 'mu_ratio', 'balance_target', 'trimmed_count',
    'MODE_NONE', 'MODE_FIXED', 'MODE_AUTO', 'LOWER_TAIL', 'UPPER_TAIL',
]
