"""Logit fusion, the plausibility gate, and token sampling.

Fusion blends the current step's normalized logits with the historical
residual on the candidate pool and leaves everything else untouched. The
plausibility gate keeps only tokens whose CURRENT probability clears a
fraction of the current maximum — it is always computed pre-fusion, so the
residual can reorder plausible tokens but never resurrect implausible
ones. Sampling is deterministic given (seed, step).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from resdec.errors import ConfigError, DegenerateDistribution, DimensionError, MaskError
from resdec.logitmath import softmax
from resdec.pooling import top_k_by_score
from resdec.residual import ResidualSignal


def fuse(current: np.ndarray, residual: ResidualSignal, alpha: float) -> np.ndarray:
    """(1-alpha)*current + alpha*residual on pool tokens; identity elsewhere.

    alpha=0 returns current exactly (bitwise); alpha=1 substitutes the
    residual values exactly on the pool.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    cur = np.asarray(current, dtype=np.float64)
    if cur.ndim != 1:
        raise DimensionError("current must be 1-D")
    out = cur.copy()
    if alpha == 0.0:
        return out
    idx = residual.pool.tokens
    if np.any(idx >= cur.size):
        raise DimensionError("residual pool outside the vocabulary")
    if alpha == 1.0:
        out[idx] = residual.values
    else:
        out[idx] = (1.0 - alpha) * cur[idx] + alpha * residual.values
    return out


def plausibility_mask(current: np.ndarray, beta: float) -> np.ndarray:
    """Token ids whose current probability is >= beta * max probability.

    beta=0 keeps the full vocabulary; beta=1 keeps only the argmax tie
    set. The current-step argmax always survives, so the mask can never
    empty the choice set.
    """
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must be in [0, 1], got {beta}")
    cur = np.asarray(current, dtype=np.float64)
    if cur.ndim != 1 or cur.size == 0:
        raise DimensionError("current must be a non-empty 1-D array")
    if beta == 0.0:
        return np.arange(cur.size, dtype=np.int64)
    probs = softmax(cur)
    return np.flatnonzero(probs >= beta * probs.max()).astype(np.int64)


def apply_mask(fused: np.ndarray, v_head: np.ndarray) -> np.ndarray:
    """-inf outside v_head; values inside unchanged."""
    ids = np.asarray(v_head, dtype=np.int64)
    if ids.size == 0:
        raise MaskError("mask excluded every candidate")
    f = np.asarray(fused, dtype=np.float64)
    if np.any(ids < 0) or np.any(ids >= f.size):
        raise DimensionError("mask ids outside the vocabulary")
    out = np.full(f.size, -np.inf)
    out[ids] = f[ids]
    return out


@dataclass(frozen=True)
class SamplingStrategy:
    """Parsed decoding strategy: greedy | top_k | nucleus | temperature."""

    kind: str
    k: int | None = None
    p: float | None = None
    t: float | None = None


def parse_strategy(spec: str | SamplingStrategy) -> SamplingStrategy:
    """Parse 'greedy', 'topk:<k>', 'nucleus:<p>', or 'temp:<t>'."""
    if isinstance(spec, SamplingStrategy):
        return spec
    text = spec.strip().lower()
    if text == "greedy":
        return SamplingStrategy(kind="greedy")
    head, sep, arg = text.partition(":")
    if not sep:
        raise ConfigError(f"malformed strategy {spec!r}")
    try:
        if head in ("topk", "top_k"):
            k = int(arg)
            if k < 1:
                raise ConfigError(f"top-k needs k >= 1, got {k}")
            return SamplingStrategy(kind="top_k", k=k)
        if head == "nucleus":
            p = float(arg)
            if not 0.0 < p <= 1.0:
                raise ConfigError(f"nucleus needs 0 < p <= 1, got {p}")
            return SamplingStrategy(kind="nucleus", p=p)
        if head in ("temp", "temperature"):
            t = float(arg)
            if not t > 0.0:
                raise ConfigError(f"temperature needs t > 0, got {t}")
            return SamplingStrategy(kind="temperature", t=t)
    except ValueError as exc:
        raise ConfigError(f"malformed strategy argument in {spec!r}") from exc
    raise ConfigError(f"unknown strategy {spec!r}")


def step_rng(seed: int, step: int) -> np.random.Generator:
    """The per-step random stream: independent of every other step,
    reproducible from (seed, step) alone."""
    if seed < 0 or step < 0:
        raise ConfigError("seed and step must be nonnegative")
    return np.random.default_rng((seed, step))


def _draw(ids: np.ndarray, probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs)
    u = rng.random() * cum[-1]
    j = int(np.searchsorted(cum, u, side="right"))
    return int(ids[min(j, ids.size - 1)])


def sample(masked: np.ndarray, strategy: str | SamplingStrategy, rng: np.random.Generator) -> int:
    """Draw a token id from masked logits under the given strategy.

    Greedy takes the argmax (ties: lowest id) and consumes no randomness;
    stochastic strategies consume exactly one uniform draw.
    """
    s = np.asarray(masked, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise DimensionError("masked logits must be a non-empty 1-D array")
    if np.any(np.isnan(s)) or np.any(s == np.inf):
        raise DegenerateDistribution("masked logits contain NaN or +inf")
    if not np.any(np.isfinite(s)):
        raise DegenerateDistribution("no finite logits to sample from")
    strat = parse_strategy(strategy)

    if strat.kind == "greedy":
        return int(np.argmax(s))

    if strat.kind == "temperature":
        finite = np.flatnonzero(np.isfinite(s))
        scaled = (s[finite] - np.max(s[finite])) / strat.t
        return _draw(finite, softmax(scaled), rng)

    if strat.kind == "top_k":
        ids = top_k_by_score(s, strat.k)
        vals = s[ids]
        keep = np.isfinite(vals)
        ids, vals = ids[keep], vals[keep]
        return _draw(ids, softmax(vals), rng)

    if strat.kind == "nucleus":
        order = top_k_by_score(s, s.size)
        order = order[np.isfinite(s[order])]
        probs = softmax(s[order])
        cum = np.cumsum(probs)
        cut = int(np.searchsorted(cum, strat.p - 1e-12, side="left"))
        cut = min(cut, order.size - 1)
        kept = probs[: cut + 1]
        return _draw(order[: cut + 1], kept / kept.sum(), rng)

    raise ConfigError(f"unknown strategy kind {strat.kind!r}")
