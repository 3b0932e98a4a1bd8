"""Evaluation metrics: confusion counts, lookahead accuracy, divergence profile."""

import numpy as np
import pytest

from resdec import DimensionError, SyntheticTaskSpec, generate_trace
from resdec.metrics import (
    ConfusionCounts,
    JsdProfile,
    MetricsReport,
    OffsetAccuracyReport,
    accuracy_score,
    binary_confusion,
    f1_score,
    jsd_profile,
    latency_stats,
    offset_accuracy,
)

# Hand fixture of 20 labeled examples: 7 true positives, 3 false positives,
# 2 false negatives, 8 true negatives (positive class = 1).
_PREDICTIONS = [1] * 7 + [1] * 3 + [0] * 2 + [0] * 8
_LABELS = [1] * 7 + [0] * 3 + [1] * 2 + [0] * 8


class TestConfusion:
    def test_hand_fixture_counts(self):
        counts = binary_confusion(_PREDICTIONS, _LABELS, positive=1)
        assert counts == ConfusionCounts(tp=7, fp=3, fn=2, tn=8)
        assert counts.total == 20

    def test_f1_from_hand_fixture(self):
        counts = binary_confusion(_PREDICTIONS, _LABELS, positive=1)
        # precision 7/10, recall 7/9 -> F1 = 2*7 / (2*7 + 3 + 2) = 14/19.
        np.testing.assert_allclose(
            f1_score(counts), 0.7368421052631579, rtol=0, atol=1e-15
        )

    def test_accuracy_from_hand_fixture(self):
        np.testing.assert_allclose(accuracy_score(_PREDICTIONS, _LABELS), 0.75)

    def test_f1_zero_conventions(self):
        # No predicted positives: precision undefined -> 0 by convention.
        assert f1_score(ConfusionCounts(tp=0, fp=0, fn=3, tn=5)) == 0.0
        # No actual positives: recall undefined -> 0 by convention.
        assert f1_score(ConfusionCounts(tp=0, fp=2, fn=0, tn=6)) == 0.0

    def test_perfect_f1(self):
        assert f1_score(ConfusionCounts(tp=5, fp=0, fn=0, tn=5)) == 1.0

    def test_accuracy_empty_is_zero(self):
        assert accuracy_score([], []) == 0.0

    def test_length_mismatch_errors(self):
        with pytest.raises(DimensionError):
            binary_confusion([1, 0], [1], positive=1)
        with pytest.raises(DimensionError):
            accuracy_score([1, 0], [1])


class TestLatencyStats:
    def test_quantiles(self):
        lat = np.arange(1.0, 101.0)
        mean, p50, p95 = latency_stats(lat)
        np.testing.assert_allclose(mean, 50.5)
        np.testing.assert_allclose(p50, 50.5)
        np.testing.assert_allclose(p95, 95.05)

    def test_empty_is_zeroes(self):
        assert latency_stats([]) == (0.0, 0.0, 0.0)


class TestOffsetAccuracy:
    def _traces(self, n=50):
        spec = SyntheticTaskSpec()
        return spec, [generate_trace(spec, seed=s) for s in range(n)]

    def test_default_task_profile_is_frozen(self):
        spec, traces = self._traces()
        report = offset_accuracy(
            traces, {spec.answer_token, spec.hallucination_token}
        )
        assert report.offsets() == list(range(-8, 0))
        # Early churn steps rank the decoy above the answer; from mid-guide
        # on, the answer leads deterministically at the default noise level.
        assert [report.per_offset[d] for d in report.offsets()] == [
            0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        ]
        assert all(report.counts[d] == 50 for d in report.offsets())
        assert report.n_traces == 50 and report.n_skipped == 0

    def test_non_decreasing_toward_answer(self):
        spec, traces = self._traces()
        report = offset_accuracy(
            traces, {spec.answer_token, spec.hallucination_token}
        )
        values = [report.per_offset[d] for d in report.offsets()]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] == 1.0

    def test_unlabeled_traces_are_skipped(self):
        spec, traces = self._traces(n=5)
        stripped = traces[0]
        stripped.header.label = None
        report = offset_accuracy(
            traces, {spec.answer_token, spec.hallucination_token}
        )
        assert report.n_skipped == 1
        assert all(report.counts[d] == 4 for d in report.offsets())
        stripped.header.label = spec.answer_token  # restore shared fixture

    def test_custom_offsets(self):
        spec, traces = self._traces(n=10)
        report = offset_accuracy(
            traces, {spec.answer_token, spec.hallucination_token}, offsets=[-1, -5]
        )
        assert report.offsets() == [-5, -1]

    def test_nonnegative_offets_rejected(self):
        spec, traces = self._traces(n=2)
        with pytest.raises(DimensionError):
            offset_accuracy(traces, {1, 2}, offsets=[0])
        with pytest.raises(DimensionError):
            offset_accuracy(traces, set())

    def test_offsets_beyond_trace_start_drop_denominator(self):
        spec, traces = self._traces(n=3)
        report = offset_accuracy(
            traces, {spec.answer_token, spec.hallucination_token}, offsets=[-12, -1]
        )
        assert report.counts[-12] == 0
        assert report.per_offset[-12] == 0.0
        assert report.counts[-1] == 3


class TestJsdProfile:
    def test_frozen_default_task_profile(self):
        spec = SyntheticTaskSpec()
        traces = [generate_trace(spec, seed=s) for s in range(50)]
        prof = jsd_profile(traces, pool_k=8)
        np.testing.assert_array_equal(prof.positions, np.arange(8))
        np.testing.assert_allclose(
            prof.mean,
            [
                0.2606247745426448,
                0.2711800770247562,
                0.24939144699426105,
                0.12888804685771088,
                0.00904493456829478,
                0.02298483491974895,
                0.03357430388669492,
                0.4149200045147745,
            ],
            rtol=0,
            atol=1e-12,
        )
        assert np.all(prof.counts == 50)
        assert prof.n_traces == 50
        assert np.all(prof.std >= 0.0)

    def test_u_shape_on_default_task(self):
        # Churn keeps early transitions hot; the quiet zone is the floor;
        # the injected answer step spikes the final transition.
        spec = SyntheticTaskSpec()
        traces = [generate_trace(spec, seed=s) for s in range(50)]
        prof = jsd_profile(traces, pool_k=8)
        quiet_floor = prof.mean[3:7].min()
        assert prof.mean[0] > 5 * quiet_floor
        assert prof.mean[-1] > 5 * quiet_floor

    def test_population_std_matches_numpy(self):
        spec = SyntheticTaskSpec()
        traces = [generate_trace(spec, seed=s) for s in range(12)]
        prof = jsd_profile(traces, pool_k=8)
        from resdec.logitmath import log_softmax
        from resdec.pooling import candidate_pool, jsd_curve

        curves = []
        for t in traces:
            recs = t.generated_records()
            pool = candidate_pool(
                log_softmax(recs[-1].dense_logits(t.vocab_size)), 8
            )
            curves.append(jsd_curve(recs, pool))
        stacked = np.stack(curves)
        np.testing.assert_allclose(prof.mean, stacked.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(prof.std, stacked.std(axis=0), atol=1e-10)

    def test_ragged_traces_contribute_prefixes(self):
        spec = SyntheticTaskSpec()
        long = generate_trace(spec, seed=0)
        short = generate_trace(SyntheticTaskSpec(guide_len=4), seed=0)
        prof = jsd_profile([long, short], pool_k=8)
        assert prof.mean.size == 8  # longest curve wins
        assert prof.counts[0] == 2
        assert prof.counts[-1] == 1

    def test_zero_traces_errors(self):
        with pytest.raises(DimensionError):
            jsd_profile([], pool_k=8)


class TestMetricsReport:
    def test_optional_fields_and_serialization(self):
        report = MetricsReport(accuracy=0.9, f1=0.8)
        d = report.to_dict()
        assert d["accuracy"] == 0.9 and d["f1"] == 0.8

    def test_bounds_validated(self):
        with pytest.raises(Exception):
            MetricsReport(accuracy=1.5)
