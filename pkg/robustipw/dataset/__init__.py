"""
Dataset package - data model, CSV ingestion and the NSW/PSID replication data.
"""
from .records import Dataset, Observation, load_csv
from .nsw import NSW_FEATURES, build_nsw_features, load_nsw
from .fetch import fetch_nsw_data

__all__ = [
    'Dataset',
    'Observation',
    'load_csv',
    'NSW_FEATURES',
    'build_nsw_features',
    'load_nsw',
    'fetch_nsw_data',
]
