"""
Download the public Dehejia-Wahba NSW treated and PSID comparison files and
convert them to the composite CSV read by ``load_nsw``.
"""
import io
import os
import logging

import pandas as pd
import requests

from ..errors import DataFetchError
from .nsw import NSW_OUTCOME, NSW_TREATMENT, nsw_path

logger = logging.getLogger(__name__)

SOURCE_FILES = ("nswre74_treated.txt", "psid_controls.txt")

# column order of the whitespace-delimited public files
SOURCE_COLUMNS = [
    NSW_TREATMENT, "age", "education", "black", "hispanic", "married", "nodegree",
    "earn1974", "earn1975", NSW_OUTCOME,
]


def _download(url, timeout):
    try:
        response = requests.get(url, timeout=timeout)
    except requests.RequestException as e:
        raise DataFetchError(f"Error downloading {url}: {str(e)}") from e
    if response.status_code != 200:
        raise DataFetchError(f"Download of {url} failed with HTTP {response.status_code}")
    return response.text


def parse_source_text(text):
    """Parse one whitespace-delimited public file into a DataFrame"""
    return pd.read_csv(io.StringIO(text), sep=r"\s+", header=None, names=SOURCE_COLUMNS,
                       float_precision="round_trip")


def fetch_nsw_data(data_dir, url_root, timeout=30):
    """Fetch the source files into data_dir and write the composite CSV

    Returns:
        Path of the written CSV
    """
    os.makedirs(data_dir, exist_ok=True)
    frames = []
    for name in SOURCE_FILES:
        url = f"{url_root.rstrip('/')}/{name}"
        logger.info(f"Fetching {url}")
        text = _download(url, timeout)
        with open(os.path.join(data_dir, name), 'w') as f:
            f.write(text)
        frames.append(parse_source_text(text))

    combined = pd.concat(frames, ignore_index=True)
    combined[NSW_TREATMENT] = combined[NSW_TREATMENT].astype(int)
    out_path = nsw_path(data_dir)
    combined.to_csv(out_path, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(combined)} rows to {out_path}")
    return out_path
