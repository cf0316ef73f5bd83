"""
Shared numerical helpers: empirical CDFs of weights and the bisection used by
both the trimming-threshold selector and the bandwidth rule.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)

BISECTION_TOLERANCE = 1e-12

LOWER_TAIL = "lower_tail"
UPPER_TAIL = "upper_tail"
ORIENTATIONS = (LOWER_TAIL, UPPER_TAIL)


def orient(weights, orientation):
    """Map weights onto the axis where the hazardous tail sits at zero"""
    weights = np.asarray(weights, dtype=float)
    if orientation == LOWER_TAIL:
        return weights
    if orientation == UPPER_TAIL:
        return 1.0 - weights
    raise ValueError(f"Unknown orientation: {orientation}")


def empirical_cdf(sorted_values, x):
    """Fraction of values <= x; sorted_values must be ascending"""
    return np.searchsorted(sorted_values, x, side='right') / sorted_values.size


def power_cdf(sorted_values, exponent, x):
    """g(x) = x**exponent * F(x), nondecreasing and right-continuous"""
    return x ** exponent * empirical_cdf(sorted_values, x)


def solve_power_cdf(values, exponent, target, tol=BISECTION_TOLERANCE):
    """Smallest x in [0, 1] with x**exponent * F(x) >= target

    Returns None when even x = 1 falls short of the target. Jumps of the
    empirical CDF that carry g across the target are returned exactly.
    """
    sorted_values = np.sort(np.asarray(values, dtype=float))
    if target <= 0:
        return 0.0
    if power_cdf(sorted_values, exponent, 1.0) < target:
        return None

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if power_cdf(sorted_values, exponent, mid) >= target:
            hi = mid
        else:
            lo = mid

    # A data point inside (lo, hi] where g jumps over the target is the infimum.
    idx = np.searchsorted(sorted_values, lo, side='right')
    if idx < sorted_values.size and sorted_values[idx] <= hi:
        jump = float(sorted_values[idx])
        left_limit = jump ** exponent * empirical_cdf(sorted_values, lo)
        if left_limit < target <= power_cdf(sorted_values, exponent, jump):
            return jump
    return hi


def ordered_map(task, count, threads=1, progress=False, desc=None):
    """Run task(r) for r in range(count) on a thread pool

    Results come back in replication order whatever the thread count.
    """
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(tqdm(executor.map(task, range(count)), total=count, desc=desc,
                         disable=not progress, leave=False))
