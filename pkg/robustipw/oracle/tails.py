"""
Tail diagnostics for probability weights near zero.
"""
import logging
import math
from dataclasses import replace

import numpy as np

from .._numerics import LOWER_TAIL, orient
from ..errors import ContractError, DiagnosticError
from .designs import generate, truncated_moments

logger = logging.getLogger(__name__)

# half-width around 2 within which weights look approximately uniform near zero
UNIFORM_BAND = 0.25


def tail_index_hill(weights, k):
    """Hill-type estimate of gamma0 from the k smallest weights

    1 + [ (1/k) sum_{i<=k} log(e_(k+1) / e_(i)) ]^(-1), order statistics ascending.
    """
    e = np.sort(np.asarray(weights, dtype=float))
    n = e.size
    if not (2 <= k and 2 * k < n):
        raise ContractError(f"Need 2 <= k < n/2, got k={k}, n={n}")
    if e[0] <= 0:
        raise DiagnosticError("Weights must be positive for the tail index")
    mean_log = float(np.mean(np.log(e[k] / e[:k])))
    if not (mean_log > 0 and math.isfinite(mean_log)):
        raise DiagnosticError(f"Tied order statistics: the {k} smallest weights are all equal to e_(k+1)")
    return 1.0 + 1.0 / mean_log


def default_tail_count(n):
    return max(2, min(int(math.sqrt(n)), (n - 1) // 2))


def tail_diagnostics(weights, orientation=LOWER_TAIL, k=None):
    """Hill estimate of the tail index of the (oriented) weights with flags"""
    w = orient(weights, orientation)
    k = default_tail_count(w.size) if k is None else k
    estimate = tail_index_hill(w, k)
    return {
        'orientation': orientation,
        'k': k,
        'tail_index': estimate,
        'heavy_tail': estimate < 2.0,
        'approximately_uniform': abs(estimate - 2.0) <= UNIFORM_BAND,
    }


def tail_balance_check(design, x_grid, n=None, replication=None):
    """x P[DY/e > x] / P[e < 1/x] against ((g-1)/g) alpha_plus(0)

    Empirical ratios on x_grid from one large simulated sample.
    """
    if n is not None and n != design.n:
        design = replace(design, n=n)
    data = generate(design, replication)
    e = data.true_weights
    z = data.d * data.y / e
    alpha_plus, _ = truncated_moments(design)
    g = design.gamma0
    target = (g - 1.0) / g * alpha_plus(0.0)

    rows = []
    for x in x_grid:
        lower = float(np.mean(e < 1.0 / x))
        ratio = x * float(np.mean(z > x)) / lower if lower > 0 else math.nan
        rows.append({'x': float(x), 'ratio': ratio})
    logger.info(f"Tail balance: target {target:.4g}, ratios {[round(r['ratio'], 4) for r in rows]}")
    return {'target': target, 'n': design.n, 'rows': rows}
