"""Precision/recall metrics, threshold sweeps and latency measurement.

The positive class is "flagged as attack". Flagging here is always
score-above-threshold; a darknet-oriented model (which flags low scores)
sweeps correctly by passing negated scores. Zero-denominator conventions
are fixed: precision is 1.0 when nothing was flagged, recall is 1.0 when
the truth contains no positives.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyScoresError, LengthMismatchError


@dataclass(slots=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    mean_inference_ms: float | None = None
    p95_inference_ms: float | None = None


def precision_recall(scores: Sequence[float], labels: Sequence[bool],
                     threshold: float) -> Metrics:
    """Confusion counts and ratios at one threshold (flag = score > threshold)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise LengthMismatchError(
            f"{scores.shape[0]} scores vs {labels.shape[0]} labels")

    flagged = scores > threshold
    tp = int(np.sum(flagged & labels))
    fp = int(np.sum(flagged & ~labels))
    tn = int(np.sum(~flagged & ~labels))
    fn = int(np.sum(~flagged & labels))
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return Metrics(tp=tp, fp=fp, tn=tn, fn=fn, precision=precision, recall=recall)


def sweep_thresholds(scores: Sequence[float], labels: Sequence[bool],
                     n_points: int = 101) -> list[tuple[float, Metrics]]:
    """Metrics at n_points thresholds evenly spaced over [min, max] score.

    Recall is non-increasing along the sweep since raising the threshold
    can only unflag samples.
    """
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyScoresError("cannot sweep zero scores")
    thresholds = np.linspace(scores.min(), scores.max(), n_points)
    return [(float(t), precision_recall(scores, labels, float(t))) for t in thresholds]


def time_inference(score_fn: Callable[[np.ndarray], float],
                   samples: np.ndarray, repeats: int = 3) -> tuple[float, float]:
    """Single-threaded per-sample latency of score_fn, as (mean_ms, p95_ms).

    One untimed warmup pass over all samples runs first; the statistics
    pool the per-sample wall times of all counted repeats.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) == 0:
        raise EmptyScoresError("cannot time zero samples")

    for row in samples:
        score_fn(row)

    laps = np.empty(repeats * len(samples))
    i = 0
    for _ in range(repeats):
        for row in samples:
            t0 = time.perf_counter_ns()
            score_fn(row)
            laps[i] = time.perf_counter_ns() - t0
            i += 1
    laps /= 1e6
    return float(laps.mean()), float(np.percentile(laps, 95.0))
