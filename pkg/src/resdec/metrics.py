"""Evaluation metrics over decode outcomes and stored traces.

Covers the binary-task scores (accuracy, F1 with the zero convention),
the per-offset lookahead accuracy analysis, the pooled adjacent-divergence
profile, and per-token latency statistics.  Everything here consumes plain
arrays, traces, or decode results; nothing touches the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from resdec.errors import DimensionError
from resdec.logitmath import log_softmax
from resdec.pooling import candidate_pool, jsd_curve

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "OffsetAccuracyReport",
    "JsdProfile",
    "binary_confusion",
    "accuracy_score",
    "f1_score",
    "latency_stats",
    "offset_accuracy",
    "jsd_profile",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion counts for a fixed positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _as_labels(x, name: str) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def binary_confusion(predictions, labels, positive) -> ConfusionCounts:
    """Confusion counts of ``predictions`` against ``labels``.

    Any value other than ``positive`` counts as the negative class.
    """
    pred = _as_labels(predictions, "predictions")
    lab = _as_labels(labels, "labels")
    if pred.size != lab.size:
        raise DimensionError(
            f"predictions ({pred.size}) and labels ({lab.size}) must be the same length"
        )
    pp = pred == positive
    lp = lab == positive
    return ConfusionCounts(
        tp=int(np.sum(pp & lp)),
        fp=int(np.sum(pp & ~lp)),
        fn=int(np.sum(~pp & lp)),
        tn=int(np.sum(~pp & ~lp)),
    )


def accuracy_score(predictions, labels) -> float:
    """Fraction of exact matches; 0.0 on empty input."""
    pred = _as_labels(predictions, "predictions")
    lab = _as_labels(labels, "labels")
    if pred.size != lab.size:
        raise DimensionError(
            f"predictions ({pred.size}) and labels ({lab.size}) must be the same length"
        )
    if pred.size == 0:
        return 0.0
    return float(np.mean(pred == lab))


def f1_score(counts: ConfusionCounts) -> float:
    """F1 from binary confusion counts.

    Convention: 0.0 when no positives are predicted (tp+fp == 0) or none are
    present (tp+fn == 0); otherwise 2*tp / (2*tp + fp + fn).
    """
    if counts.tp + counts.fp == 0 or counts.tp + counts.fn == 0:
        return 0.0
    return 2.0 * counts.tp / (2.0 * counts.tp + counts.fp + counts.fn)


def latency_stats(latencies_us) -> tuple[float, float, float]:
    """(mean, p50, p95) of per-token latencies in microseconds."""
    lat = np.asarray(latencies_us, dtype=np.float64)
    if lat.size == 0:
        return (0.0, 0.0, 0.0)
    return (
        float(lat.mean()),
        float(np.percentile(lat, 50)),
        float(np.percentile(lat, 95)),
    )


@dataclass(frozen=True)
class OffsetAccuracyReport:
    """Lookahead accuracy per negative offset from the answer step.

    ``per_offset`` maps offset d (in -W..-1) to the fraction of usable traces
    whose stored-entry argmax over the answer set at step (answer_step + d)
    equals the label.  ``n_skipped`` counts traces dropped for missing labels
    or answer steps; ``counts`` holds each offset's denominator (traces can
    lack a record at very negative offsets).
    """

    per_offset: dict[int, float]
    counts: dict[int, int]
    n_traces: int
    n_skipped: int

    def offsets(self) -> list[int]:
        return sorted(self.per_offset)


def offset_accuracy(traces, answer_set, window_w: int = 8, offsets=None) -> OffsetAccuracyReport:
    """Accuracy of the answer-set argmax at each offset before the answer step.

    For each offset d (default -window_w..-1) and each labeled trace, reads
    the stored record at step (answer_step + d), compares the answer-set
    tokens by their stored scores (absent tokens fall to the record's floor),
    and scores a hit when the argmax equals the trace label.  Ties break to
    the lowest token id.  Traces without a label or answer step are skipped
    and counted; offsets with no usable record contribute to no denominator.
    """
    if offsets is None:
        if window_w < 1:
            raise DimensionError("window_w must be >= 1")
        offsets = range(-window_w, 0)
    offsets = [int(d) for d in offsets]
    if any(d >= 0 for d in offsets):
        raise DimensionError("offsets must be negative (the answer step itself is excluded)")
    answer_ids = np.asarray(sorted(int(t) for t in answer_set), dtype=np.int64)
    if answer_ids.size == 0:
        raise DimensionError("answer_set must be non-empty")

    hits = {d: 0 for d in offsets}
    counts = {d: 0 for d in offsets}
    n_traces = 0
    n_skipped = 0
    for trace in traces:
        n_traces += 1
        if trace.label is None or trace.answer_step is None:
            n_skipped += 1
            continue
        for d in offsets:
            try:
                rec = trace.record_at_step(trace.answer_step + d)
            except KeyError:
                continue
            scores = rec.pool_logits(answer_ids)
            predicted = int(answer_ids[int(np.argmax(scores))])
            counts[d] += 1
            hits[d] += int(predicted == trace.label)
    per_offset = {d: (hits[d] / counts[d] if counts[d] else 0.0) for d in offsets}
    return OffsetAccuracyReport(
        per_offset=per_offset, counts=counts, n_traces=n_traces, n_skipped=n_skipped
    )


@dataclass(frozen=True)
class JsdProfile:
    """Mean and spread of adjacent-step divergence per history position.

    Position i is the transition between generated records i and i+1 (oldest
    first).  Each trace's curve is computed over its own final-step candidate
    pool; traces shorter than a position simply do not contribute there.
    """

    positions: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    counts: np.ndarray
    n_traces: int


def jsd_profile(traces, pool_k: int) -> JsdProfile:
    """Per-position mean/std of adjacent-step divergence across traces."""
    curves: list[np.ndarray] = []
    n_traces = 0
    for trace in traces:
        n_traces += 1
        records = trace.generated_records()
        if len(records) < 2:
            continue
        final_dense = log_softmax(records[-1].dense_logits(trace.vocab_size))
        pool = candidate_pool(final_dense, pool_k)
        curves.append(jsd_curve(records, pool))
    if n_traces == 0:
        raise DimensionError("jsd_profile requires at least one trace")
    if not curves:
        empty = np.zeros(0)
        return JsdProfile(positions=empty.astype(np.int64), mean=empty, std=empty,
                          counts=empty.astype(np.int64), n_traces=n_traces)
    longest = max(c.size for c in curves)
    sums = np.zeros(longest)
    sq_sums = np.zeros(longest)
    counts = np.zeros(longest, dtype=np.int64)
    for c in curves:
        sums[: c.size] += c
        sq_sums[: c.size] += np.square(c)
        counts[: c.size] += 1
    mean = sums / counts
    variance = np.maximum(sq_sums / counts - np.square(mean), 0.0)
    return JsdProfile(
        positions=np.arange(longest, dtype=np.int64),
        mean=mean,
        std=np.sqrt(variance),
        counts=counts,
        n_traces=n_traces,
    )


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated evaluation results; fields not computed by a given analysis
    stay None.  Scores must be within [0, 1] when present."""

    accuracy: float | None = None
    f1: float | None = None
    per_offset_accuracy: dict[int, float] | None = None
    mean_jsd_curve: np.ndarray | None = None
    latency_mean_us: float | None = None
    latency_p50_us: float | None = None
    latency_p95_us: float | None = None
    counterfactual_flips: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("accuracy", "f1"):
            value = getattr(self, name)
            if value is not None and not (0.0 <= float(value) <= 1.0):
                raise DimensionError(f"{name} must lie in [0, 1], got {value!r}")
        if self.per_offset_accuracy is not None:
            for d, v in self.per_offset_accuracy.items():
                if not (0.0 <= float(v) <= 1.0):
                    raise DimensionError(
                        f"per-offset accuracy at {d} must lie in [0, 1], got {v!r}"
                    )

    def to_dict(self) -> dict:
        out: dict = {}
        for name in (
            "accuracy",
            "f1",
            "latency_mean_us",
            "latency_p50_us",
            "latency_p95_us",
            "counterfactual_flips",
        ):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.per_offset_accuracy is not None:
            out["per_offset_accuracy"] = {str(k): v for k, v in sorted(self.per_offset_accuracy.items())}
        if self.mean_jsd_curve is not None:
            out["mean_jsd_curve"] = [float(x) for x in self.mean_jsd_curve]
        if self.extras:
            out["extras"] = dict(self.extras)
        return out
