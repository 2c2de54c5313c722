import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fxhekm.errors import ConfigurationError
from fxhekm.metrics import (
    MetricSeries,
    anr_curves,
    anr_series,
    ensemble_anr,
    ensemble_mse,
    exceeds,
    plateau,
    smoothed_magnitude,
)

signal = arrays(np.float64, 40, elements=st.floats(-100, 100))


def smoother_oracle(x, theta):
    a, out = 0.0, []
    for v in x:
        a = theta * a + (1 - theta) * abs(v)
        out.append(a)
    return np.array(out)


def test_unit_error_is_zero_db():
    m = ensemble_mse([np.ones(10)])
    assert np.array_equal(m.values_db, np.zeros(10))
    assert m.iterations == 10


def test_mean_of_squares():
    m = ensemble_mse([[1.0], [3.0]])
    assert m.values_db[0] == pytest.approx(10 * math.log10(5))


def test_zero_power_is_absent():
    assert np.isnan(ensemble_mse([[0.0, 1.0]]).values_db[0])


def test_mse_length_mismatch():
    with pytest.raises(ConfigurationError):
        ensemble_mse([[1.0, 2.0], [1.0]])
    with pytest.raises(ConfigurationError):
        ensemble_mse([])


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 12), elements=st.floats(-10, 10)), st.permutations(range(4)))
def test_mse_permutation_invariant(traces, perm):
    a = ensemble_mse(traces).values_db
    b = ensemble_mse(traces[list(perm)]).values_db
    np.testing.assert_allclose(a, b, rtol=1e-12, equal_nan=True)


def test_smoother_matches_recursion():
    x = np.random.default_rng(0).standard_normal(100)
    np.testing.assert_allclose(smoothed_magnitude(x, 0.99), smoother_oracle(x, 0.99), rtol=1e-12)


def test_no_control_is_zero_db():
    d = np.random.default_rng(1).standard_normal(50)
    np.testing.assert_allclose(anr_series(d, d).values_db, 0.0, atol=1e-12)


def test_perfect_cancellation_is_absent():
    a = anr_curves(np.zeros(5), np.ones(5))
    assert np.all(np.isnan(a))


def test_first_sample_unroll():
    a = anr_curves(np.array([1.0]), np.array([-1.0]), 0.99)
    assert a[0] == 0.0
    assert smoothed_magnitude([1.0], 0.99)[0] == pytest.approx(0.01)


def test_silent_prefix_is_absent():
    a = anr_curves(np.array([0.0, 0.0, 0.5]), np.array([0.0, 0.0, 1.0]))
    assert np.isnan(a[:2]).all() and a[2] == pytest.approx(20 * math.log10(0.5))


def test_anr_checks():
    with pytest.raises(ConfigurationError):
        anr_curves(np.zeros(3), np.zeros(4))
    with pytest.raises(ConfigurationError):
        anr_curves(np.zeros(3), np.zeros(3), theta=1.0)


@settings(max_examples=40, deadline=None)
@given(e=signal, d=signal, c=st.floats(1e-3, 1e3))
def test_anr_scale_invariance(e, d, c):
    a = anr_curves(e, d)
    b = anr_curves(c * e, c * d)
    defined = ~np.isnan(a) & ~np.isnan(b)
    np.testing.assert_allclose(a[defined], b[defined], atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(x=signal, theta=st.floats(0.01, 0.999))
def test_smoother_nonnegative_and_bounded(x, theta):
    a = smoothed_magnitude(x, theta)
    assert np.all(a >= 0)
    assert np.all(a <= np.abs(x).max() * (1 + 1e-12) + 1e-300)


def test_ensemble_anr_ignores_absent():
    curves = np.array([[np.nan, -10.0, -20.0], [np.nan, np.nan, -10.0]])
    out = ensemble_anr(curves).values_db
    assert np.isnan(out[0]) and out[1] == -10.0 and out[2] == -15.0


def test_plateau_and_at():
    s = MetricSeries("x", np.r_[np.zeros(90), np.full(10, -5.0)])
    assert s.plateau(0.1) == -5.0
    assert s.at(1) == 0.0 and s.at(100) == -5.0
    assert np.isnan(plateau(np.full(10, np.nan)))


def test_exceeds_after():
    c = np.array([[5.0, -1.0, -1.0], [-1.0, -1.0, 0.5], [-1.0, 0.0, -1.0]])
    assert exceeds(c, 0.0, after=1).tolist() == [False, True, False]
    assert exceeds(c, 0.0).tolist() == [True, True, False]
