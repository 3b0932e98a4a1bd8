"""Confidence scoring and the weighted historical residual signal."""

import numpy as np
import pytest

from resdec import (
    ConfigError,
    EmptyHistory,
    candidate_pool,
    confidence_scores,
    log_softmax,
    record_from_dense,
    residual_logits,
)
from resdec.pooling import pool_logit_rows
from resdec.records import ORIGIN_GENERATED
from resdec.residual import confidence


def _record_with_pool_dist(step, probs, pool_tokens):
    """A record whose pool-restricted distribution is exactly `probs`."""
    dense = np.full(16, -40.0)
    dense[np.asarray(pool_tokens)] = np.log(np.asarray(probs, dtype=np.float64))
    return record_from_dense(step, ORIGIN_GENERATED, log_softmax(dense), 16)


def _uniform_pool(k=4):
    return candidate_pool(log_softmax(np.linspace(1, 0, 16)), k)


class TestConfidence:
    def test_frozen_values_mean_surprisal(self):
        pool = _uniform_pool(4)
        cases = [
            ((0.25, 0.25, 0.25, 0.25), 1.3862943611198906),
            ((0.7, 0.2, 0.1, None), 1.422899316455626),
            ((0.998, 0.001, 0.001, None), 4.605837520211649),
        ]
        for probs, want in cases:
            probs = [p for p in probs if p is not None]
            pool_k = candidate_pool(log_softmax(np.linspace(1, 0, 16)), len(probs))
            rec = _record_with_pool_dist(1, probs, pool_k.tokens)
            got = confidence(rec, pool_k)
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_certainty_mode_is_exp_of_negated_default(self):
        pool = _uniform_pool(4)
        rec = _record_with_pool_dist(1, [0.25] * 4, pool.tokens)
        got = confidence(rec, pool, mode="certainty")
        np.testing.assert_allclose(got, 0.25, rtol=0, atol=1e-9)
        nll = confidence(rec, pool, mode="pool_nll")
        np.testing.assert_allclose(got, np.exp(-nll), rtol=0, atol=1e-12)

    def test_peaked_beats_flat_in_default_mode(self):
        pool = _uniform_pool(3)
        flat = _record_with_pool_dist(1, [1 / 3] * 3, pool.tokens)
        peaked = _record_with_pool_dist(2, [0.9, 0.05, 0.05], pool.tokens)
        # Mean surprisal grows as mass leaves the pool's typical set; the
        # peaked record scores HIGHER because its two tail tokens are rare.
        assert confidence(peaked, pool) > confidence(flat, pool)

    def test_unknown_mode_errors(self):
        pool = _uniform_pool(3)
        rec = _record_with_pool_dist(1, [1 / 3] * 3, pool.tokens)
        with pytest.raises(ConfigError):
            confidence(rec, pool, mode="entropy")

    def test_scores_vector_matches_scalar(self):
        rng = np.random.default_rng(40)
        pool = _uniform_pool(6)
        window = [
            record_from_dense(
                s, ORIGIN_GENERATED, log_softmax(rng.normal(0, 2, 16)), 16
            )
            for s in range(1, 6)
        ]
        got = confidence_scores(window, pool)
        want = [confidence(r, pool) for r in window]
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


class TestResidualLogits:
    def _window(self, rng, n, vocab=16):
        return [
            record_from_dense(
                s, ORIGIN_GENERATED, log_softmax(rng.normal(0, 2, vocab)), vocab
            )
            for s in range(1, n + 1)
        ]

    def test_uniform_weights_average_pool_rows(self):
        rng = np.random.default_rng(41)
        window = self._window(rng, 4)
        pool = _uniform_pool(5)
        sig = residual_logits(window, pool, aggregation="uniform")
        rows = pool_logit_rows(window, pool)
        np.testing.assert_allclose(sig.values, rows.mean(axis=0), rtol=0, atol=1e-12)
        np.testing.assert_allclose(sig.weights, 0.25, atol=1e-15)
        assert sig.degraded is False
        assert sig.source_steps == [1, 2, 3, 4]

    def test_confidence_weights_sum_to_one_and_order_by_peakedness(self):
        pool = _uniform_pool(3)
        flat = _record_with_pool_dist(1, [1 / 3] * 3, pool.tokens)
        peaked = _record_with_pool_dist(2, [0.9, 0.05, 0.05], pool.tokens)
        sig = residual_logits([flat, peaked], pool, aggregation="confidence")
        np.testing.assert_allclose(sig.weights.sum(), 1.0, atol=1e-12)
        assert sig.weights[1] > sig.weights[0]

    def test_values_are_weight_matrix_product(self):
        rng = np.random.default_rng(42)
        window = self._window(rng, 5)
        pool = _uniform_pool(4)
        sig = residual_logits(window, pool)
        rows = pool_logit_rows(window, pool)
        np.testing.assert_allclose(sig.values, sig.weights @ rows, rtol=0, atol=1e-12)

    def test_distance_decay_weights(self):
        rng = np.random.default_rng(43)
        window = self._window(rng, 3)  # steps 1, 2, 3
        pool = _uniform_pool(4)
        sig = residual_logits(
            window, pool, aggregation="distance_decay", current_step=4
        )
        raw = np.array([1 / 3, 1 / 2, 1 / 1])
        np.testing.assert_allclose(sig.weights, raw / raw.sum(), rtol=0, atol=1e-12)

    def test_distance_decay_requires_current_step(self):
        rng = np.random.default_rng(44)
        window = self._window(rng, 3)
        pool = _uniform_pool(4)
        with pytest.raises(ConfigError):
            residual_logits(window, pool, aggregation="distance_decay")
        with pytest.raises(ConfigError):
            residual_logits(
                window, pool, aggregation="distance_decay", current_step=3
            )

    def test_top_n_confident_zeroes_all_but_n(self):
        pool = _uniform_pool(3)
        recs = [
            _record_with_pool_dist(1, [0.9, 0.05, 0.05], pool.tokens),
            _record_with_pool_dist(2, [1 / 3] * 3, pool.tokens),
            _record_with_pool_dist(3, [0.8, 0.1, 0.1], pool.tokens),
        ]
        sig = residual_logits(recs, pool, aggregation="top_n_confident", top_n=2)
        # The flat middle record has the lowest mean surprisal: dropped.
        assert sig.weights[1] == 0.0
        assert sig.weights[0] > 0.0 and sig.weights[2] > 0.0
        np.testing.assert_allclose(sig.weights.sum(), 1.0, atol=1e-12)

    def test_top_n_ties_keep_later_records(self):
        pool = _uniform_pool(3)
        recs = [
            _record_with_pool_dist(s, [0.5, 0.3, 0.2], pool.tokens) for s in (1, 2, 3)
        ]
        sig = residual_logits(recs, pool, aggregation="top_n_confident", top_n=2)
        assert sig.weights[0] == 0.0  # earliest identical record loses the tie
        assert sig.weights[1] > 0.0 and sig.weights[2] > 0.0

    def test_top_n_requires_positive_n(self):
        pool = _uniform_pool(3)
        recs = [_record_with_pool_dist(1, [0.5, 0.3, 0.2], pool.tokens)]
        with pytest.raises(ConfigError):
            residual_logits(recs, pool, aggregation="top_n_confident")

    def test_empty_delta_errors(self):
        with pytest.raises(EmptyHistory):
            residual_logits([], _uniform_pool(3))

    def test_unknown_aggregation_errors(self):
        pool = _uniform_pool(3)
        recs = [_record_with_pool_dist(1, [0.5, 0.3, 0.2], pool.tokens)]
        with pytest.raises(ConfigError):
            residual_logits(recs, pool, aggregation="softmax")

    def test_single_record_passthrough(self):
        rng = np.random.default_rng(45)
        window = self._window(rng, 1)
        pool = _uniform_pool(4)
        sig = residual_logits(window, pool)
        np.testing.assert_allclose(
            sig.values, window[0].pool_logits(pool.tokens), rtol=0, atol=1e-12
        )
        np.testing.assert_allclose(sig.weights, [1.0], atol=1e-15)
