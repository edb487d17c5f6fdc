import pytest
from hypothesis import given, strategies as st

from ctmaas.network import predict_travel_time


def series(values, t0=0.0):
    return [(t0 + i, v) for i, v in enumerate(values)]


def test_constant_history_is_fixed_point():
    assert predict_travel_time(series([100.0, 100.0, 100.0])) == pytest.approx(100.0)


def test_two_point_history_hand_computed():
    # s1 = 100, s2 = 0.3 * 200 + 0.7 * 100
    assert predict_travel_time(series([100.0, 200.0])) == pytest.approx(130.0)


def test_single_sample_initializes_level():
    assert predict_travel_time(series([80.0])) == pytest.approx(80.0)


def test_empty_history_rejected():
    with pytest.raises(ValueError):
        predict_travel_time([])


def test_unordered_history_rejected():
    with pytest.raises(ValueError, match="chronologically"):
        predict_travel_time([(10.0, 100.0), (5.0, 90.0)])


def test_horizon_does_not_shift_level_forecast():
    history = series([90.0, 110.0, 120.0])
    assert predict_travel_time(history, 0.0) == predict_travel_time(history, 900.0)


@given(st.lists(st.floats(1.0, 10_000.0), min_size=1, max_size=50))
def test_forecast_within_history_range(values):
    forecast = predict_travel_time(series(values))
    assert min(values) - 1e-9 <= forecast <= max(values) + 1e-9
