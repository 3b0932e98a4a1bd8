"""Confidence weighting and the historical residual signal.

Each aggregated record contributes its pool-restricted logits, weighted by
a per-record confidence: the mean negative log-probability the record's
pool distribution assigns across the pool (higher when the distribution is
concentrated, because the off-mode pool tokens then carry large negative
log-probabilities). Weights are normalized to the simplex and the residual
is their convex combination of per-record pool logits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from resdec.errors import ConfigError, EmptyHistory
from resdec.logitmath import normalize_weights, row_softmax, softmax
from resdec.pooling import CandidatePool, pool_distributions, pool_logit_rows

AGGREGATIONS = ("confidence", "uniform", "distance_decay", "top_n_confident")

CONFIDENCE_MODES = ("pool_nll", "certainty")


@dataclass
class ResidualSignal:
    """Convex combination of per-record pool logits.

    values[i] pairs with pool.tokens[i]; weights sum to 1 over the source
    records; `degraded` flags the all-zero-confidence fallback to uniform.
    """

    pool: CandidatePool
    values: np.ndarray
    weights: np.ndarray
    source_steps: list[int] = field(default_factory=list)
    degraded: bool = False


def confidence(rec, pool: CandidatePool, mode: str = "pool_nll") -> float:
    """Per-record confidence over the pool.

    pool_nll (default): -(1/k) * sum_j log P_rec(j), nonnegative, larger
    for concentrated distributions. certainty (experimental alternative):
    the geometric-mean probability exp(+mean log P), in (0, 1], larger
    when the record is certain about pool-mass placement — the inverted
    reading kept for comparison runs.
    """
    dist = softmax(rec.pool_logits(pool.tokens))
    return float(_confidences_from_dists(dist[None, :], mode)[0])


def _confidences_from_dists(dists: np.ndarray, mode: str) -> np.ndarray:
    with np.errstate(divide="ignore"):
        mean_log = np.log(dists).mean(axis=1)
    if mode == "pool_nll":
        return -mean_log
    if mode == "certainty":
        return np.exp(mean_log)
    raise ConfigError(f"unknown confidence mode {mode!r}")


def confidence_scores(window, pool: CandidatePool, mode: str = "pool_nll") -> np.ndarray:
    """confidence() across a list of records."""
    return _confidences_from_dists(pool_distributions(window, pool), mode)


def residual_logits(
    delta,
    pool: CandidatePool,
    *,
    aggregation: str = "confidence",
    confidence_mode: str = "pool_nll",
    current_step: int | None = None,
    top_n: int | None = None,
) -> ResidualSignal:
    """Weighted sum of the delta records' pool logits.

    Aggregations: confidence (default), uniform, distance_decay
    (weight proportional to 1/(current_step - record step)), and
    top_n_confident (confidence weighting restricted to the n most
    confident records; later steps win confidence ties).
    """
    if len(delta) == 0:
        raise EmptyHistory("residual requested over an empty record set")
    if aggregation not in AGGREGATIONS:
        raise ConfigError(f"unknown aggregation {aggregation!r}")
    n = len(delta)
    degraded = False

    stacked = pool_logit_rows(delta, pool)
    if aggregation == "uniform":
        weights = np.full(n, 1.0 / n)
    elif aggregation == "distance_decay":
        if current_step is None:
            raise ConfigError("distance_decay requires current_step")
        gaps = np.array([current_step - rec.step_index for rec in delta], dtype=np.float64)
        if np.any(gaps <= 0):
            raise ConfigError("distance_decay requires records strictly before current_step")
        weights, degraded = normalize_weights(1.0 / gaps)
    else:
        conf = _confidences_from_dists(row_softmax(stacked), confidence_mode)
        if aggregation == "top_n_confident":
            if top_n is None or top_n < 1:
                raise ConfigError("top_n_confident requires top_n >= 1")
            keep = min(top_n, n)
            # Order by confidence descending; later records win ties.
            order = np.lexsort((-np.arange(n), -conf))[:keep]
            masked = np.zeros(n)
            masked[order] = conf[order]
            conf = masked
        weights, degraded = normalize_weights(conf)

    values = weights @ stacked
    return ResidualSignal(
        pool=pool,
        values=values,
        weights=weights,
        source_steps=[rec.step_index for rec in delta],
        degraded=degraded,
    )
