"""The decode loop: pool, segment, aggregate, fuse, gate, sample, record.

`Decoder.step` is one full residual-decoding step over a dense logit
vector. `decode` drives a `LogitSource` until exhaustion/EOS/limit and
collects per-step diagnostics, including the counterfactual token the
residual-free pipeline would have chosen. `regular_decode` is that
residual-free pipeline as a standalone implementation (normalize, gate,
sample) sharing the same per-step random streams, so the alpha=0
equivalence is checkable across two independent code paths.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from resdec.errors import ConfigError, EmptyHistory
from resdec.logitmath import log_softmax
from resdec.pooling import (
    PhaseSegmentation,
    aggregation_window,
    candidate_pool,
    jsd_curve,
    locate_valley,
)
from resdec.records import (
    ORIGIN_GENERATED,
    HistoryBuffer,
    StepRecord,
    record_from_dense,
)
from resdec.residual import AGGREGATIONS, CONFIDENCE_MODES, residual_logits
from resdec.sampling import (
    SamplingStrategy,
    apply_mask,
    fuse,
    parse_strategy,
    plausibility_mask,
    sample,
    step_rng,
)


@dataclass
class DecodeConfig:
    """Knobs for one decode session (validated on construction)."""

    alpha: float = 0.5
    beta: float = 0.1
    window_w: int = 8
    pool_k: int = 256
    top_m: int = 1024
    strategy: str | SamplingStrategy = "greedy"
    seed: int = 0
    max_new_tokens: int = 256
    aggregation: str = "confidence"
    top_n: int | None = None
    confidence_mode: str = "pool_nll"
    # Experimental: skip normalizing the current logits before fusion, to
    # compare scale conventions. The default shares one scale across both
    # fused streams.
    normalize_before_fuse: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {self.beta}")
        if self.window_w < 2:
            raise ConfigError(f"window_w must be >= 2, got {self.window_w}")
        if self.pool_k < 2:
            raise ConfigError(f"pool_k must be >= 2, got {self.pool_k}")
        if self.top_m < self.pool_k:
            raise ConfigError(
                f"top_m ({self.top_m}) must be >= pool_k ({self.pool_k})"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.max_new_tokens < 0:
            raise ConfigError("max_new_tokens must be nonnegative")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        if self.aggregation == "top_n_confident" and (self.top_n is None or self.top_n < 1):
            raise ConfigError("top_n_confident aggregation requires top_n >= 1")
        if self.confidence_mode not in CONFIDENCE_MODES:
            raise ConfigError(f"unknown confidence mode {self.confidence_mode!r}")
        self.strategy = parse_strategy(self.strategy)


@dataclass
class StepOutcome:
    """Per-step diagnostics."""

    step: int
    chosen: int
    regular_choice: int
    flip: bool
    valley_index: int | None
    delta_size: int
    weights: np.ndarray | None
    pool_size: int
    v_head_size: int
    latency_us: float
    degraded: bool
    segmentation: PhaseSegmentation | None = None


@dataclass
class DecodeResult:
    """Emitted tokens plus the per-step diagnostic trail."""

    tokens: list[int] = field(default_factory=list)
    outcomes: list[StepOutcome] = field(default_factory=list)

    @property
    def flips(self) -> int:
        return sum(1 for o in self.outcomes if o.flip)

    def latencies_us(self) -> np.ndarray:
        return np.array([o.latency_us for o in self.outcomes], dtype=np.float64)


class Decoder:
    """One decode session: owns the history buffer and step counter."""

    def __init__(self, cfg: DecodeConfig):
        self.cfg = cfg
        self.history = HistoryBuffer(capacity=cfg.window_w)
        self.emitted: list[int] = []

    @property
    def step_index(self) -> int:
        return len(self.emitted) + 1

    def push_prefill(self, rec: StepRecord) -> None:
        self.history.push(rec)

    def step(self, current_raw: np.ndarray, step_index: int | None = None) -> StepOutcome:
        """Run one residual-decoding step over dense raw logits."""
        cfg = self.cfg
        t = self.step_index if step_index is None else step_index
        t0 = time.perf_counter_ns()

        cur = log_softmax(current_raw) if cfg.normalize_before_fuse else np.asarray(
            current_raw, dtype=np.float64
        )
        pool = candidate_pool(cur, cfg.pool_k)

        try:
            win = self.history.window(t, cfg.window_w)
        except EmptyHistory:
            win = []

        segmentation = None
        resid = None
        if len(win) == 0:
            fused = cur
        else:
            if len(win) < 3:
                delta = win
            else:
                curve = jsd_curve(win, pool)
                valley = locate_valley(curve)
                segmentation = aggregation_window(
                    win, valley, curve=curve, smoothed=curve.size >= 3
                )
                delta = win[valley:]
            resid = residual_logits(
                delta,
                pool,
                aggregation=cfg.aggregation,
                confidence_mode=cfg.confidence_mode,
                current_step=t,
                top_n=cfg.top_n,
            )
            fused = fuse(cur, resid, cfg.alpha)

        v_head = plausibility_mask(cur, cfg.beta)
        masked = apply_mask(fused, v_head)
        token = sample(masked, cfg.strategy, step_rng(cfg.seed, t))
        self.history.push(
            record_from_dense(t, ORIGIN_GENERATED, cur, cfg.top_m, chosen_token=token)
        )
        latency_us = (time.perf_counter_ns() - t0) / 1000.0

        # Counterfactual: what the residual-free pipeline would have chosen,
        # fed the same per-step random stream. Diagnostic only — excluded
        # from the step latency.
        regular_choice = sample(apply_mask(cur, v_head), cfg.strategy, step_rng(cfg.seed, t))

        self.emitted.append(int(token))
        return StepOutcome(
            step=t,
            chosen=int(token),
            regular_choice=int(regular_choice),
            flip=int(token) != int(regular_choice),
            valley_index=None if segmentation is None else segmentation.valley_index,
            delta_size=0 if resid is None else len(resid.source_steps),
            weights=None if resid is None else resid.weights,
            pool_size=pool.size,
            v_head_size=int(v_head.size),
            latency_us=latency_us,
            degraded=False if resid is None else resid.degraded,
            segmentation=segmentation,
        )


def decode(source, cfg: DecodeConfig) -> DecodeResult:
    """Drive a LogitSource with residual decoding until it ends, flags
    EOS, or max_new_tokens is reached."""
    dec = Decoder(cfg)
    for rec in source.prefill_records():
        dec.push_prefill(rec)
    result = DecodeResult()
    prev: int | None = None
    for _ in range(cfg.max_new_tokens):
        delivery = source.next_logits(prev)
        if delivery is None:
            break
        outcome = dec.step(delivery.logits)
        result.tokens.append(outcome.chosen)
        result.outcomes.append(outcome)
        prev = outcome.chosen
        if delivery.eos:
            break
    return result


def regular_decode(source, cfg: DecodeConfig) -> DecodeResult:
    """The residual-free pipeline: normalize, gate at beta, sample.

    Independent of Decoder on purpose, so equivalence at alpha=0 compares
    two implementations rather than one with itself. Uses the same
    (seed, step) random streams.
    """
    result = DecodeResult()
    prev: int | None = None
    step = 0
    for _ in range(cfg.max_new_tokens):
        delivery = source.next_logits(prev)
        if delivery is None:
            break
        step += 1
        t0 = time.perf_counter_ns()
        cur = log_softmax(delivery.logits)
        v_head = plausibility_mask(cur, cfg.beta)
        masked = apply_mask(cur, v_head)
        token = sample(masked, cfg.strategy, step_rng(cfg.seed, step))
        latency_us = (time.perf_counter_ns() - t0) / 1000.0
        result.tokens.append(int(token))
        result.outcomes.append(
            StepOutcome(
                step=step,
                chosen=int(token),
                regular_choice=int(token),
                flip=False,
                valley_index=None,
                delta_size=0,
                weights=None,
                pool_size=0,
                v_head_size=int(v_head.size),
                latency_us=latency_us,
                degraded=False,
            )
        )
        prev = int(token)
        if delivery.eos:
            break
    return result
