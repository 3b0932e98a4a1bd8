"""Primitive distribution math shared by every other module.

Conventions (enforced, not optional): natural log everywhere; 0*log(0) = 0;
probability vectors must be finite, nonnegative, and sum to 1 within 1e-9.
"""

from __future__ import annotations

import numpy as np

from resdec.errors import (
    DegenerateDistribution,
    DimensionError,
    EmptyPool,
    SupportMismatch,
)

# Floor used inside js_divergence mixture logs when an atom is exactly zero
# in one argument. Never applied in kl_divergence, which must error instead.
_MIX_EPS = 1e-12

_SUM_TOL = 1e-9


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _check_distribution(p: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(p)):
        raise DegenerateDistribution(f"{name} contains non-finite mass")
    if np.any(p < 0.0):
        raise DegenerateDistribution(f"{name} contains negative mass")
    total = float(p.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise DegenerateDistribution(f"{name} sums to {total!r}, not 1")


def log_softmax(scores) -> np.ndarray:
    """Normalize logits to log-probabilities, stably.

    Accepts -inf entries (excluded tokens). Rejects NaN/+inf inputs and
    all-(-inf) vectors. Idempotent: applying twice changes nothing beyond
    1e-9 per entry.
    """
    s = _as_float_array(scores, "scores")
    if s.size == 0:
        raise DimensionError("scores must be non-empty")
    if np.any(np.isnan(s)) or np.any(s == np.inf):
        raise DegenerateDistribution("scores contain NaN or +inf")
    m = np.max(s)
    if m == -np.inf:
        raise DegenerateDistribution("all scores are -inf")
    shifted = s - m
    # exp(-inf) = 0 is exactly the mass we want for excluded tokens.
    with np.errstate(invalid="ignore"):
        lse = np.log(np.sum(np.exp(shifted)))
    return shifted - lse


def softmax(scores) -> np.ndarray:
    """exp(log_softmax(scores)); same input contract."""
    return np.exp(log_softmax(scores))


def row_softmax(rows) -> np.ndarray:
    """Row-wise softmax of a 2-D array of finite scores.

    Validation-free fast path for matrices whose finiteness is guaranteed by
    construction (stored-record logits are finite by invariant). Rows of the
    result sum to 1 within floating-point error.
    """
    r = np.asarray(rows, dtype=np.float64)
    if r.ndim != 2 or r.size == 0:
        raise DimensionError("rows must be a non-empty 2-D array")
    shifted = r - r.max(axis=1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=1, keepdims=True)


def log_sum_exp(scores) -> float:
    """Stable log(sum(exp(scores))) over a 1-D array; -inf entries drop out."""
    s = _as_float_array(scores, "scores")
    if s.size == 0:
        raise DimensionError("scores must be non-empty")
    m = np.max(s)
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(s - m))))


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats. Errors on support mismatch instead of flooring."""
    p = _as_float_array(p, "p")
    q = _as_float_array(q, "q")
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {q.shape}")
    _check_distribution(p, "p")
    _check_distribution(q, "q")
    active = p > 0.0
    if np.any(q[active] == 0.0):
        raise SupportMismatch("q assigns zero mass where p is positive")
    pa = p[active]
    qa = q[active]
    return float(np.sum(pa * (np.log(pa) - np.log(qa))))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats: mean KL to the even mixture.

    Bitwise symmetric: both halves are computed from the same expression,
    and the mixture (p+q)/2 is itself symmetric under IEEE addition.
    """
    p = _as_float_array(p, "p")
    q = _as_float_array(q, "q")
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {q.shape}")
    _check_distribution(p, "p")
    _check_distribution(q, "q")
    m = 0.5 * (p + q)
    log_m = np.log(np.maximum(m, _MIX_EPS))

    def _half(a: np.ndarray) -> float:
        active = a > 0.0
        return float(np.sum(a[active] * (np.log(a[active]) - log_m[active])))

    return 0.5 * _half(p) + 0.5 * _half(q)


def entropy(p) -> float:
    """Shannon entropy in nats with the 0*log(0) = 0 convention."""
    p = _as_float_array(p, "p")
    _check_distribution(p, "p")
    active = p > 0.0
    return float(-np.sum(p[active] * np.log(p[active])))


def restrict_renormalize(scores, pool_ids) -> np.ndarray:
    """Probability vector over `pool_ids` from full-domain logits.

    Output is aligned to the order of `pool_ids`. Tokens outside the pool
    contribute nothing; the pool entries are softmax-renormalized.
    """
    s = _as_float_array(scores, "scores")
    ids = np.asarray(pool_ids, dtype=np.int64)
    if ids.ndim != 1:
        raise DimensionError("pool_ids must be one-dimensional")
    if ids.size == 0:
        raise EmptyPool("pool is empty")
    if np.unique(ids).size != ids.size:
        raise DimensionError("pool_ids contains duplicates")
    if np.any(ids < 0) or np.any(ids >= s.size):
        raise DimensionError("pool_ids outside the vocabulary")
    return softmax(s[ids])


def normalize_weights(weights) -> tuple[np.ndarray, bool]:
    """Scale nonnegative weights to the simplex.

    Returns (weights, degraded): when every weight is zero the result is
    uniform and `degraded` is True so callers can surface the event.
    """
    w = _as_float_array(weights, "weights")
    if w.size == 0:
        raise DimensionError("weights must be non-empty")
    if not np.all(np.isfinite(w)):
        raise DegenerateDistribution("weights contain non-finite values")
    if np.any(w < 0.0):
        raise DegenerateDistribution("weights contain negative values")
    total = float(w.sum())
    if total == 0.0:
        return np.full(w.size, 1.0 / w.size), True
    return w / total, False


