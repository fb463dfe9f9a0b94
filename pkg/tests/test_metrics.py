"""Confusion counting, threshold sweeps and the timing harness."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ganids import metrics
from ganids.errors import EmptyScoresError, LengthMismatchError


# --------------------------------------------------------- precision/recall

def test_perfect_separation():
    m = metrics.precision_recall(np.array([0.9, 0.8, 0.2, 0.1]),
                                 np.array([True, True, False, False]), 0.5)
    assert (m.tp, m.fp, m.tn, m.fn) == (2, 0, 2, 0)
    assert m.precision == 1.0
    assert m.recall == 1.0


def test_everything_flagged_half_positive():
    m = metrics.precision_recall(np.ones(4), np.array([True, False, True, False]), 0.5)
    assert m.precision == 0.5
    assert m.recall == 1.0


def test_threshold_above_all_scores():
    m = metrics.precision_recall(np.array([0.1, 0.2]), np.array([True, False]), 0.9)
    assert (m.tp, m.fp) == (0, 0)
    assert m.precision == 1.0    # nothing called, nothing wrong
    assert m.recall == 0.0


def test_no_positive_truth_recall_convention():
    m = metrics.precision_recall(np.array([1.0, 0.0]), np.array([False, False]), 0.5)
    assert m.recall == 1.0
    assert m.precision == 0.0


def test_flagging_is_strictly_above():
    m = metrics.precision_recall(np.array([0.5]), np.array([True]), 0.5)
    assert m.tp == 0
    assert m.fn == 1


def test_length_mismatch_rejected():
    with pytest.raises(LengthMismatchError):
        metrics.precision_recall(np.ones(3), np.array([True, False]), 0.5)


# ------------------------------------------------------------------ sweeps

def test_sweep_constant_scores_is_flat():
    swept = metrics.sweep_thresholds(np.full(6, 2.0),
                                     np.array([True, False] * 3), n_points=5)
    assert len(swept) == 5
    first = swept[0][1]
    assert all(m == first for _, m in swept)


def test_sweep_spans_score_range():
    scores = np.array([0.0, 1.0, 2.0, 3.0])
    labels = np.array([False, False, True, True])
    swept = metrics.sweep_thresholds(scores, labels, n_points=4)
    assert [t for t, _ in swept] == [0.0, 1.0, 2.0, 3.0]
    assert any(m.precision == 1.0 and m.recall == 1.0 for _, m in swept)


def test_sweep_validates():
    with pytest.raises(EmptyScoresError):
        metrics.sweep_thresholds(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        metrics.sweep_thresholds(np.ones(3), np.zeros(3, dtype=bool), n_points=1)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(-100, 100), st.booleans()),
                min_size=1, max_size=40))
def test_sweep_properties_on_random_data(pairs):
    scores = np.array([s for s, _ in pairs])
    labels = np.array([l for _, l in pairs])
    swept = metrics.sweep_thresholds(scores, labels, n_points=11)
    recalls = [m.recall for _, m in swept]
    assert recalls == sorted(recalls, reverse=True)
    fps = [m.fp for _, m in swept]
    assert fps == sorted(fps, reverse=True)
    for threshold, m in swept:
        assert m.tp + m.fp + m.tn + m.fn == len(pairs)
        assert (m.tp, m.fp, m.tn, m.fn) == oracles.confusion_brute(
            scores, labels, threshold)


# ------------------------------------------------------------------ timing

def test_time_inference_reports_positive_times():
    samples = np.ones((20, 4))
    mean_ms, p95_ms = metrics.time_inference(lambda row: float(row.sum()), samples)
    assert np.isfinite(mean_ms) and mean_ms > 0
    assert np.isfinite(p95_ms) and p95_ms >= 0


def test_time_inference_validates():
    with pytest.raises(EmptyScoresError):
        metrics.time_inference(lambda row: 0.0, np.empty((0, 4)))
    with pytest.raises(ValueError):
        metrics.time_inference(lambda row: 0.0, np.ones((3, 2)), repeats=0)
