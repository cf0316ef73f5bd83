import math

import numpy as np
import pytest

from robustipw.biascorrect import (
    TARGET_Y, TARGET_Y_SQUARED, LocalPolyFit, estimate_bias, local_poly_fit, rate_statistic, select_bandwidth,
)
from robustipw.dataset import Dataset
from robustipw.errors import BandwidthError, ContractError
from robustipw.trimming import LOWER_TAIL, UPPER_TAIL


def treated(y, e):
    e = np.asarray(e, dtype=float)
    return Dataset(y=y, d=np.ones(e.size, dtype=int), x=e.reshape(-1, 1), covariate_names=("e",))


def test_bias_from_linear_fit():
    fit = LocalPolyFit(coefficients=np.array([1.0, 2.0]), order=1, bandwidth=0.3, n_local=10)
    weights = np.array([0.1, 0.2, 0.5, 0.8])
    # fitted values 1.2 and 1.4 for the two trimmed units, n = 4
    assert estimate_bias(fit, weights, 0.25, 4) == pytest.approx(-0.65, abs=1e-10)


def test_bias_zero_when_nothing_trimmed():
    fit = LocalPolyFit(coefficients=np.array([1.0, 2.0]), order=1, bandwidth=0.2, n_local=10)
    assert estimate_bias(fit, np.array([0.3, 0.5]), 0.1, 2) == 0.0


def test_bias_refuses_extrapolation():
    fit = LocalPolyFit(coefficients=np.array([1.0]), order=0, bandwidth=0.1, n_local=10)
    with pytest.raises(ContractError):
        estimate_bias(fit, np.array([0.05]), 0.2, 1)


def test_upper_tail_bias_weights_by_e():
    fit = LocalPolyFit(coefficients=np.array([2.0]), order=0, bandwidth=0.5, n_local=10,
                       orientation=UPPER_TAIL)
    weights = np.array([0.9, 0.6, 0.3])
    # only e = 0.9 has 1 - e < 0.2: 0.9 * 2 / n1
    assert estimate_bias(fit, weights, 0.2, 2) == pytest.approx(0.9)


def test_exact_linear_fit():
    e = np.linspace(0.01, 0.3, 30)
    fit = local_poly_fit(treated(5.0 + 0.0 * e, e), e, 0.3, 1)
    np.testing.assert_allclose(fit.coefficients, [5.0, 0.0], atol=1e-10)
    fit = local_poly_fit(treated(1.0 + 2.0 * e, e), e, 0.3, 1)
    np.testing.assert_allclose(fit.coefficients, [1.0, 2.0], atol=1e-10)


def test_exact_cubic_fit():
    e = np.linspace(0.01, 0.5, 40)
    y = 1.0 - e + 3.0 * e ** 2 - 2.0 * e ** 3
    fit = local_poly_fit(treated(y, e), e, 0.5, 3)
    np.testing.assert_allclose(fit.coefficients, [1.0, -1.0, 3.0, -2.0], atol=1e-8)


def test_normal_equations_five_points():
    e = np.array([0.02, 0.05, 0.08, 0.12, 0.18])
    y = np.array([1.3, 0.7, 1.9, 1.1, 2.4])
    fit = local_poly_fit(treated(y, e), e, 0.2, 1)
    X = np.column_stack([np.ones(5), e])
    expected = np.linalg.solve(X.T @ X, X.T @ y)
    np.testing.assert_allclose(fit.coefficients, expected, rtol=1e-9)
    assert fit.n_local == 5


def test_fit_uses_window_and_group():
    e = np.array([0.05, 0.1, 0.15, 0.2, 0.6, 0.05])
    y = np.array([1.0, 1.0, 1.0, 1.0, 100.0, 100.0])
    data = Dataset(y=y, d=[1, 1, 1, 1, 1, 0], x=e.reshape(-1, 1), covariate_names=("e",))
    fit = local_poly_fit(data, e, 0.3, 1)
    assert fit.n_local == 4
    assert fit.intercept == pytest.approx(1.0)


def test_squared_target():
    e = np.linspace(0.01, 0.2, 20)
    fit = local_poly_fit(treated(np.full(20, -3.0), e), e, 0.2, 0, TARGET_Y_SQUARED)
    assert fit.intercept == pytest.approx(9.0)


def test_upper_tail_fit_on_comparison_units():
    e = np.array([0.95, 0.9, 0.85, 0.8, 0.3])
    y = 2.0 + 4.0 * (1.0 - e)
    data = Dataset(y=y, d=[0, 0, 0, 0, 1], x=e.reshape(-1, 1), covariate_names=("e",))
    fit = local_poly_fit(data, e, 0.25, 1, TARGET_Y, UPPER_TAIL)
    np.testing.assert_allclose(fit.coefficients, [2.0, 4.0], atol=1e-10)


def test_upper_tail_bias_sums_over_all_units_in_window():
    e = np.array([0.95, 0.9, 0.85, 0.8, 0.92, 0.3])
    d = np.array([0, 0, 0, 0, 1, 1])
    # the treated outcome at e = 0.92 is far off the comparison line and must not enter the fit
    y = np.where(d == 0, 2.0 + 4.0 * (1.0 - e), 100.0)
    data = Dataset(y=y, d=d, x=e.reshape(-1, 1), covariate_names=("e",))
    fit = local_poly_fit(data, e, 0.25, 1, TARGET_Y, UPPER_TAIL)
    np.testing.assert_allclose(fit.coefficients, [2.0, 4.0], atol=1e-10)
    # window 1 - e < 0.12 holds e = 0.95, 0.9 (comparison) and 0.92 (treated); n1 = 2
    expected = sum(ei * (2.0 + 4.0 * (1.0 - ei)) for ei in (0.95, 0.9, 0.92)) / 2
    assert estimate_bias(fit, e, 0.12, 2) == pytest.approx(expected)


def test_too_few_points():
    e = np.array([0.05, 0.5, 0.6])
    with pytest.raises(BandwidthError):
        local_poly_fit(treated([1.0, 2.0, 3.0], e), e, 0.1, 1)


def test_singular_design_reduces_order():
    e = np.array([0.1, 0.1, 0.1, 0.1])
    fit = local_poly_fit(treated([1.0, 2.0, 3.0, 4.0], e), e, 0.2, 1)
    assert fit.order == 0
    assert fit.order_reduced
    assert fit.intercept == pytest.approx(2.5)


def test_fit_contracts():
    e = np.linspace(0.1, 0.9, 9)
    data = treated(np.ones(9), e)
    with pytest.raises(ContractError):
        local_poly_fit(data, e, 0.0, 1)
    with pytest.raises(ContractError):
        local_poly_fit(data, e, 0.5, 4)
    with pytest.raises(ContractError):
        local_poly_fit(data, e, 0.5, 1, "y_cubed")


def test_bandwidth_uniform_weights():
    # n * h^5 * h = 1 for uniform weights, n = 1000
    w = (np.arange(1000) + 0.5) / 1000
    h = select_bandwidth(w, 1, 1.0)
    assert h == pytest.approx(1000 ** (-1.0 / 6.0), rel=1e-2)
    assert rate_statistic(w, h, 1) >= 1.0 - 1e-9


def test_bandwidth_shrinks_with_n():
    rng = np.random.default_rng(0)
    assert select_bandwidth(rng.random(100000)) < select_bandwidth(rng.random(1000))


def test_bandwidth_capped_at_one():
    w = np.array([0.2, 0.5, 0.9])
    assert select_bandwidth(w, 1, 10.0) == 1.0
    assert rate_statistic(w, 1.0, 1) < 10.0


def test_bandwidth_contract():
    with pytest.raises(ContractError):
        select_bandwidth(np.array([0.5]), 1, 0.0)


def test_rate_statistic_value():
    w = np.array([0.1, 0.2, 0.5, 0.8])
    assert rate_statistic(w, 0.5, 0) == pytest.approx(4 * 0.5 ** 3 * 0.75)
    assert math.isclose(rate_statistic(1.0 - w, 0.5, 0, UPPER_TAIL), rate_statistic(w, 0.5, 0, LOWER_TAIL))
