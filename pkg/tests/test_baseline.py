from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moodcast.baseline import naive_class_accuracy, predict_naive
from moodcast.evaluation import rmse
from oracles import successive_difference_rmse

D0 = date(2014, 3, 1)


def dated(values):
    return [(D0 + timedelta(days=i), v) for i, v in enumerate(values)]


def naive_rmse(values):
    preds = predict_naive(dated(values))
    return rmse([p.actual for p in preds], [p.predicted for p in preds])


def test_examples():
    preds = predict_naive(dated([6.0, 7.0, 7.5]), "u")
    assert [(p.predicted, p.actual) for p in preds] == [(6.0, 7.0), (7.0, 7.5)]
    assert preds[0].target_date == D0 + timedelta(days=1) and preds[0].user_id == "u"
    assert naive_rmse([6.0, 7.0, 7.5]) == pytest.approx(np.sqrt(0.625), abs=1e-15)
    assert predict_naive(dated([6.0])) == []


def test_constant_series():
    assert naive_rmse([7.0] * 10) == 0.0
    assert naive_class_accuracy([dated([7.2] * 10), dated([5.0] * 3)]) == 1.0


def test_class_accuracy_is_pooled():
    # 1 of 2 hits for the first user, 1 of 1 for the second: 2/3 pooled
    assert naive_class_accuracy([dated([6.0, 6.2, 8.0]), dated([5.0, 5.4])]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        naive_class_accuracy([dated([6.0])])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1, 10), min_size=2, max_size=60))
def test_rmse_matches_successive_differences(values):
    assert abs(naive_rmse(values) - successive_difference_rmse(values)) <= 1e-12
