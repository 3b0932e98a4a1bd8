"""Candidate pools, adjacent-step divergence curves, and valley location.

The pool is the top-K token set of the current step. Each adjacent pair of
window records is compared by Jensen-Shannon divergence of their
pool-restricted distributions; the valley of that curve marks where recent
history settled, and the aggregation window keeps the records from the
valley onward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from resdec.errors import ConfigError, DegenerateDistribution, DimensionError
from resdec.logitmath import _MIX_EPS, row_softmax


def top_k_by_score(scores, k: int) -> np.ndarray:
    """Ids of the k largest scores, ordered by (score desc, id asc).

    Exact under ties: equal scores keep ascending id order, both for
    ranking inside the result and for deciding who makes the cut.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise DimensionError("scores must be a non-empty 1-D array")
    if np.any(np.isnan(s)):
        raise DegenerateDistribution("scores contain NaN")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    n = s.size
    kk = min(k, n)
    if kk == n:
        return np.lexsort((np.arange(n), -s))
    # Partition for the boundary value, then resolve boundary ties by id.
    boundary = -np.partition(-s, kk - 1)[kk - 1]
    above = np.flatnonzero(s > boundary)
    at = np.flatnonzero(s == boundary)
    chosen = np.concatenate([above, at[: kk - above.size]])
    return chosen[np.lexsort((chosen, -s[chosen]))]


@dataclass
class CandidatePool:
    """Top-k token ids of the current step, descending by logit."""

    tokens: np.ndarray
    k: int

    def __post_init__(self) -> None:
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        if self.tokens.ndim != 1 or self.tokens.size == 0:
            raise DimensionError("pool tokens must be a non-empty 1-D array")
        if np.unique(self.tokens).size != self.tokens.size:
            raise DimensionError("pool contains duplicate tokens")

    @property
    def size(self) -> int:
        return int(self.tokens.size)


def candidate_pool(current, k: int) -> CandidatePool:
    """Top-k tokens of the current logits; k clamps to the vocabulary."""
    if k < 2:
        raise ConfigError(f"pool size must be >= 2, got {k}")
    return CandidatePool(tokens=top_k_by_score(current, k), k=k)


@dataclass
class PhaseSegmentation:
    """Divergence curve, its valley, and the retained record offsets."""

    jsd_curve: np.ndarray
    valley_index: int
    delta_range: tuple[int, int]  # inclusive record offsets into the window
    smoothed: bool

    def offsets(self) -> np.ndarray:
        lo, hi = self.delta_range
        return np.arange(lo, hi + 1)


def pool_logit_rows(window, pool: CandidatePool) -> np.ndarray:
    """Row i = window[i]'s stored logits read out over the pool tokens."""
    if len(window) == 0:
        raise DimensionError("window must be non-empty")
    rows = np.empty((len(window), pool.size), dtype=np.float64)
    for i, rec in enumerate(window):
        rows[i] = rec.pool_logits(pool.tokens)
    return rows


def pool_distributions(window, pool: CandidatePool) -> np.ndarray:
    """Row i = the pool-restricted renormalized distribution of window[i]."""
    return row_softmax(pool_logit_rows(window, pool))


def jsd_curve(window, pool: CandidatePool) -> np.ndarray:
    """Adjacent-pair Jensen-Shannon divergences of the pool distributions.

    Vectorized over all pairs with the same conventions as js_divergence:
    0*log(0) terms drop, and the even mixture's log is floored to avoid
    log(0) where one side has underflowed to zero mass.
    """
    if len(window) < 2:
        raise DimensionError(f"need >= 2 records for a curve, got {len(window)}")
    dists = pool_distributions(window, pool)
    p, q = dists[:-1], dists[1:]
    log_m = np.log(np.maximum(0.5 * (p + q), _MIX_EPS))

    def _half(a: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = a * (np.log(a) - log_m)
        return np.where(a > 0.0, terms, 0.0).sum(axis=1)

    return 0.5 * _half(p) + 0.5 * _half(q)


def smooth_curve(curve: np.ndarray) -> np.ndarray:
    """3-point moving average, edges averaged over available neighbors."""
    c = np.asarray(curve, dtype=np.float64)
    out = np.empty(c.size, dtype=np.float64)
    for i in range(c.size):
        lo = max(0, i - 1)
        hi = min(c.size, i + 2)
        out[i] = c[lo:hi].mean()
    return out


def locate_valley(curve, smooth: bool | None = None) -> int:
    """Global-minimum index of the (optionally smoothed) curve.

    `smooth=None` applies the default policy: smooth curves of length >= 3
    (windows of >= 4 records), leave shorter ones raw. Ties resolve to the
    LATEST index — the transition closest to the current step.
    """
    c = np.asarray(curve, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise DimensionError("curve must be a non-empty 1-D array")
    if smooth is None:
        smooth = c.size >= 3
    arr = smooth_curve(c) if smooth else c
    return int(arr.size - 1 - np.argmin(arr[::-1]))


def aggregation_window(
    window,
    valley: int,
    *,
    curve: np.ndarray | None = None,
    smoothed: bool = False,
) -> PhaseSegmentation:
    """Records from the valley onward: offsets [valley .. len(window)-1].

    A valley at curve index j names the transition into record j+1; keeping
    record j as well retains the full settled pair.
    """
    n = len(window)
    if n < 2:
        raise DimensionError("aggregation window needs >= 2 records")
    if not 0 <= valley <= n - 2:
        raise DimensionError(f"valley {valley} outside curve bounds for window of {n}")
    return PhaseSegmentation(
        jsd_curve=np.asarray([] if curve is None else curve, dtype=np.float64),
        valley_index=int(valley),
        delta_range=(int(valley), n - 1),
        smoothed=bool(smoothed),
    )
