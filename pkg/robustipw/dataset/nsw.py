"""
NSW/PSID replication data: feature construction for the logit model
and the loader for the composite file written by ``fetch-data``.
"""
import os
import logging

import numpy as np

from ..errors import ConfigurationError
from .records import load_csv

logger = logging.getLogger(__name__)

NSW_FILENAME = "nsw_psid.csv"
NSW_OUTCOME = "earn1978"
NSW_TREATMENT = "treat"
NSW_RAW_COLUMNS = ("age", "education", "black", "hispanic", "married", "nodegree", "earn1974", "earn1975")
NSW_FEATURE_SOURCES = ("age", "education", "earn1974", "earn1975", "married", "black", "hispanic")

NSW_FEATURES = (
    "age", "education", "earn1974", "earn1975",
    "age_sq", "education_sq", "earn1974_sq", "earn1975_sq",
    "married", "black", "hispanic", "black_u74",
)

EXPECTED_TREATED = 185
EXPECTED_COMPARISON = 1157

# u74 is not defined beyond "unemployment status in 1974"; zero 1974 earnings is the proxy.
U74_ASSUMPTION = "u74_assumption"


def build_nsw_features(raw):
    """Construct the 12-column logit design from the raw NSW columns

    The intercept is added by the propensity model, not here.
    """
    missing = [name for name in NSW_FEATURE_SOURCES if name not in raw.covariate_names]
    if missing:
        raise ConfigurationError(f"NSW feature construction needs columns {missing}")

    col = {name: raw.column(name) for name in NSW_FEATURE_SOURCES}
    u74 = (col["earn1974"] == 0).astype(float)
    x = np.column_stack([
        col["age"], col["education"], col["earn1974"], col["earn1975"],
        col["age"] ** 2, col["education"] ** 2, col["earn1974"] ** 2, col["earn1975"] ** 2,
        col["married"], col["black"], col["hispanic"], col["black"] * u74,
    ])
    return raw.with_covariates(x, NSW_FEATURES)


def nsw_path(data_dir):
    return os.path.join(data_dir, NSW_FILENAME)


def load_nsw(data_dir):
    """Load the composite NSW treated + PSID comparison file and build features

    Returns:
        (dataset, warnings) where warnings is a list of warning codes
    """
    path = nsw_path(data_dir)
    if not os.path.exists(path):
        raise ConfigurationError(f"NSW data not found at {path}; run the fetch-data subcommand first")

    raw = load_csv(path, NSW_OUTCOME, NSW_TREATMENT, NSW_RAW_COLUMNS)
    data = build_nsw_features(raw)

    warnings = [U74_ASSUMPTION]
    treated = data.treated_count
    comparison = data.n - treated
    if (treated, comparison) != (EXPECTED_TREATED, EXPECTED_COMPARISON):
        logger.warning(f"NSW sample has {treated} treated and {comparison} comparison units; "
                       f"expected {EXPECTED_TREATED} and {EXPECTED_COMPARISON}")
        warnings.append("sample_size_mismatch")
    return data, warnings
