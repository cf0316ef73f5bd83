import os

import numpy as np
import pytest

from robustipw.dataset import Dataset
from robustipw.dataset.nsw import nsw_path


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def four_rows():
    """(y, d, e) = (2,1,.5), (4,1,.25), (1,0,.9), (3,1,.5)"""
    data = Dataset(y=[2.0, 4.0, 1.0, 3.0], d=[1, 1, 0, 1], x=[[0.5], [0.25], [0.9], [0.5]],
                   covariate_names=("e",))
    return data, np.array([0.5, 0.25, 0.9, 0.5])


@pytest.fixture
def three_rows_att():
    """(y, d, e) = (5,1,.5), (2,0,.5), (4,0,.8)"""
    data = Dataset(y=[5.0, 2.0, 4.0], d=[1, 0, 0], x=[[0.5], [0.5], [0.8]], covariate_names=("e",))
    return data, np.array([0.5, 0.5, 0.8])


@pytest.fixture
def logit_data():
    """Two-covariate logit sample with known coefficients (-0.5, 1.0, -0.7)"""
    rng = np.random.default_rng(42)
    n = 2000
    x = rng.standard_normal((n, 2))
    eta = -0.5 + 1.0 * x[:, 0] - 0.7 * x[:, 1]
    d = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(int)
    y = 1.0 + x[:, 0] + rng.standard_normal(n)
    return Dataset(y=y, d=d, x=x, covariate_names=("x1", "x2"))


@pytest.fixture
def nsw_dir():
    data_dir = os.environ.get("IPW_DATA_DIR")
    if not data_dir or not os.path.exists(nsw_path(data_dir)):
        pytest.skip("IPW_DATA_DIR does not hold the fetched NSW file")
    return data_dir
