from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erfcx, gamma

from fhi.errors import DomainError
from fhi.mittag_leffler import MLParams, kernel_lambda, ml_eval, ml_one, mittag_leffler

# oracle: 600-digit mpmath partial sums (Gamma evaluated with mpf arguments)
MPMATH_VALUES = [
    (-2.0, 0.8, 1.0, 0.18979669236370530325),
    (-5.0, 1.5, 1.5, 0.0045397084964453794347),
    (3.0, 0.6, 1.2, 592.59273002566804227),
    (-20.0, 1.8, 1.0, 0.20184270449904234902),
    (-1000.0, 1.5, 1.0, -0.00028209108987501466549),
    (-1.0, 0.8, 0.8, 0.2557438447582418705243),
    (-3.0, 1.5, 1.0, -0.1755653737999782429152),
    (-30.0, 0.8, 0.8, 0.00021082443010626109207),
    (-50.0, 1.2, 1.0, -0.0035956826952330444312),
    (-200.0, 0.9, 0.9, 2.4049509296826036505e-6),
]


@pytest.mark.parametrize("z, alpha, beta, expected", MPMATH_VALUES)
def test_against_mpmath(z, alpha, beta, expected):
    assert mittag_leffler(z, alpha, beta) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("x", [0.1, 1.0, 7.5, 39.0, 41.0, 80.0, 300.0])
def test_half_order_is_erfcx(x):
    # E_{1/2}(-x) = exp(x^2) erfc(x); covers both sides of the series/asymptotic switch
    assert mittag_leffler(-x, 0.5) == pytest.approx(erfcx(x), rel=1e-12)


def test_closed_forms():
    z = np.linspace(-10, 10, 101)
    assert np.max(np.abs(mittag_leffler(z, 1.0) - np.exp(z)) / np.maximum(1.0, np.exp(z))) < 1e-13
    x = np.linspace(0, 10, 101)
    np.testing.assert_allclose(mittag_leffler(-x * x, 2.0), np.cos(x), atol=1e-11)
    np.testing.assert_allclose(mittag_leffler(x * x, 2.0), np.cosh(x), rtol=1e-8)
    assert abs(mittag_leffler(-(math.pi / 2) ** 2, 2.0)) < 1e-12
    # E_{1,2}(z) = (e^z - 1)/z
    zz = np.array([-3.0, -0.5, 0.7, 4.0])
    np.testing.assert_allclose(mittag_leffler(zz, 1.0, 2.0), np.expm1(zz) / zz, rtol=1e-13)


@pytest.mark.parametrize("alpha, beta", [(0.3, 1.0), (0.8, 0.8), (1.5, 2.0)])
def test_zero_argument(alpha, beta):
    assert mittag_leffler(0.0, alpha, beta) == pytest.approx(1.0 / gamma(beta), rel=1e-15)


def test_shape_and_scalar_return():
    assert isinstance(mittag_leffler(0.5, 0.7), float)
    out = mittag_leffler(np.zeros((3, 4)), 0.7)
    assert out.shape == (3, 4)


def test_ml_eval_repr_of_e():
    assert repr(ml_eval(MLParams(alpha=1.0, beta=1.0), 1.0)) == "2.718281828459045"
    assert ml_one(1.0, 1.0) == math.e
    assert ml_one(1.0, -2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert ml_one(0.5, 0.0) == 1.0


@pytest.mark.parametrize("alpha", [0.0, -1.0, float("nan"), float("inf")])
def test_rejects_bad_order(alpha):
    with pytest.raises(DomainError):
        mittag_leffler(1.0, alpha)


def test_rejects_nonfinite_argument():
    with pytest.raises(DomainError):
        mittag_leffler(np.array([0.0, np.nan]), 0.8)


@given(st.floats(0.55, 0.99), st.floats(0.0, 500.0))
def test_completely_monotone_range(alpha, x):
    # for 0 < alpha < 1, E_alpha(-x) decreases from 1 and stays positive
    v = mittag_leffler(-x, alpha)
    assert 0.0 < v <= 1.0


@given(st.floats(0.3, 1.9), st.floats(1e-3, 50.0))
def test_recurrence(alpha, x):
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
    z = -x
    lhs = mittag_leffler(z, alpha, 1.0)
    rhs = 1.0 + z * mittag_leffler(z, alpha, alpha + 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


@given(st.floats(0.1, 1.0), st.lists(st.floats(0.0, 200.0), min_size=2, max_size=20))
def test_monotone_on_negative_axis(alpha, xs):
    z = -np.sort(np.array(xs))[::-1]  # increasing towards 0
    v = mittag_leffler(z, alpha, alpha)
    assert np.all(np.diff(v) >= -1e-13)


def test_kernel_lambda_values():
    assert kernel_lambda(2.0, 1.0, 1.0, 0.1) == pytest.approx(math.exp(-0.2), rel=1e-14)
    assert kernel_lambda(1.0, 0.0, 0.8, 0.1) == pytest.approx(1.0 / gamma(0.8), rel=1e-14)
    # oracle: 80-digit mpmath series
    assert kernel_lambda(0.5, 4.0, 1.5, 0.1) == pytest.approx(0.7490838683931611406009, rel=1e-13)
    with pytest.raises(DomainError):
        kernel_lambda(0.0, 1.0, 0.8, 0.1)


def test_kernel_lambda_heat_limit():
    t, y2 = 0.7, np.array([0.0, 1.0, 9.0])
    np.testing.assert_allclose(kernel_lambda(t, y2, 1.0, 0.1), np.exp(-0.1 * t * y2), rtol=1e-14)
