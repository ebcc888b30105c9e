import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lognnet.metrics import ConfusionMatrix, confusion_matrix, format_table, mean_report, metrics

from . import oracles


def test_perfect_diagonal():
    r = metrics(ConfusionMatrix(np.array([[10, 0], [0, 10]])))
    assert r.accuracy == 1.0
    assert r.precision == r.recall == r.f1 == (1.0, 1.0)


def test_hand_matrix():
    r = metrics(ConfusionMatrix(np.array([[8, 2], [1, 9]])))
    assert r.accuracy == 0.85
    assert r.precision[0] == 8 / 9
    assert r.recall[0] == 0.8
    assert r.f1[0] == pytest.approx(0.8421052631578947, abs=1e-15)


def test_never_predicted_class():
    r = metrics(ConfusionMatrix(np.array([[5, 0], [3, 0]])))
    assert r.precision[1] == 0.0 and r.precision_undefined == (False, True)
    assert r.recall[1] == 0.0 and not r.recall_undefined[1]
    assert r.f1_undefined[1]


def test_absent_class_recall_undefined():
    r = metrics(confusion_matrix([0, 0, 0], [0, 0, 0], 3))
    assert r.recall[0] == 1.0
    assert r.recall_undefined == (False, True, True)


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix(np.zeros((2, 2), dtype=int)))


def test_confusion_counts():
    cm = confusion_matrix([0, 1, 1, 2], [0, 1, 2, 2], 3)
    assert cm.counts.tolist() == [[1, 0, 0], [0, 1, 1], [0, 0, 1]]


def test_mean_is_unweighted():
    a = metrics(ConfusionMatrix(np.array([[1, 0], [0, 1]])))
    b = metrics(ConfusionMatrix(np.array([[5, 5], [5, 5]])))
    m = mean_report([a, b])
    assert m.accuracy == 0.75
    assert m.confusion.counts.tolist() == [[6, 5], [5, 6]]
    assert len(m.folds) == 2


def test_table_has_class_columns_and_flags():
    r = metrics(ConfusionMatrix(np.array([[5, 0], [3, 0]])), ("Negative", "Positive"), "m")
    text = format_table([r])
    assert "Negative" in text and "Positive" in text
    assert "0.000*" in text
    assert "62.500" in text


@settings(max_examples=1000, deadline=None)
@given(st.integers(2, 4).flatmap(
    lambda m: st.lists(st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)), min_size=1,
                       max_size=40).map(lambda pairs: (m, pairs))))
def test_agrees_with_counting_oracle(case):
    m, pairs = case
    report = metrics(confusion_matrix([t for t, _ in pairs], [p for _, p in pairs], m))
    want = oracles.counting_metrics(pairs, m)
    assert report.accuracy == want["accuracy"]
    assert list(report.precision) == want["precision"]
    assert list(report.recall) == want["recall"]
    assert list(report.f1) == want["f1"]
