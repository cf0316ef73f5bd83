"""
JSON reports: schema version, serialisation, pretty text and plot-data blocks.
"""
import json
import logging
import math
from dataclasses import replace

import numpy as np

from ._numerics import orient
from .biascorrect import local_group
from .errors import IpwError
from .estimator import estimate, orientation_for
from .resample import gaussian_interval, subsample_statistics
from .trimming import MODE_FIXED, MODE_NONE, TrimmingSpec

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
SWEEP_COUNTS = (0, 1, 2, 5, 10, 15, 20)
HISTOGRAM_BINS = 20


def to_jsonable(value):
    """Recursively convert numpy scalars/arrays and tuples; non-finite floats become None"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def build_report(command, body):
    report = {'schema_version': SCHEMA_VERSION, 'command': command}
    report.update(body)
    return to_jsonable(report)


def dumps(report):
    """Deterministic JSON text: sorted keys, no timestamps"""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _flatten(value, prefix=""):
    if isinstance(value, dict):
        for key in sorted(value):
            yield from _flatten(value[key], f"{prefix}.{key}" if prefix else key)
    elif isinstance(value, list) and value and isinstance(value[0], dict):
        for i, item in enumerate(value):
            yield from _flatten(item, f"{prefix}[{i}]")
    else:
        yield prefix, value


def render_pretty(report):
    """Human-readable key: value lines"""
    lines = []
    for key, value in _flatten(report):
        if isinstance(value, float):
            value = f"{value:.6g}"
        elif isinstance(value, list):
            value = ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def weight_histogram(data, weights, bins=HISTOGRAM_BINS):
    """Counts of weights on [0, 1] for the treated and comparison groups"""
    edges = np.linspace(0.0, 1.0, bins + 1)
    weights = np.asarray(weights, dtype=float)
    return {
        'edges': edges,
        'treated': np.histogram(weights[data.d == 1], bins=edges)[0],
        'comparison': np.histogram(weights[data.d == 0], bins=edges)[0],
    }


def sweep_thresholds(data, weights, estimand, counts=SWEEP_COUNTS):
    """Thresholds trimming exactly k units of the hazardous group, for each feasible k"""
    orientation = orientation_for(estimand)
    group_w = np.sort(orient(weights, orientation)[local_group(data, orientation)])
    thresholds = []
    for k in counts:
        if k == 0:
            thresholds.append((0, 0.0))
        elif k < group_w.size and group_w[k] > group_w[k - 1] and group_w[k] < 1.0:
            thresholds.append((k, float(group_w[k])))
    return thresholds


def threshold_sweep(data, pipeline, weights, subsampling, counts=SWEEP_COUNTS):
    """(b, theta_bc, CI) when trimming 0, 1, 2, ... units of the hazardous group"""
    rows = []
    for k, b in sweep_thresholds(data, weights, pipeline.estimand, counts):
        mode = MODE_NONE if b == 0 else MODE_FIXED
        trimming = TrimmingSpec(mode=mode, b=b, orientation=pipeline.orientation)
        point_pipeline = replace(pipeline, trimming=trimming)
        row = {'trimmed': k, 'b': b}
        try:
            full = estimate(data, None, pipeline.estimand, trimming, pipeline.bias, weights=weights)
            sub = subsample_statistics(data, point_pipeline, full, subsampling,
                                       weights=None if subsampling.refit_propensity else weights)
        except IpwError as e:
            logger.warning(f"Sweep point with {k} trimmed units failed: {e}")
            row['error'] = str(e)
            rows.append(row)
            continue
        row.update({
            'threshold_on_weights': full.threshold_on_weights,
            'theta_hat': full.theta_hat,
            'theta_bc': full.theta_bc,
            'ci': sub.ci,
            'gaussian_ci': gaussian_interval(full.theta_hat, full.s_n, full.n, subsampling.alpha),
        })
        rows.append(row)
    return rows
