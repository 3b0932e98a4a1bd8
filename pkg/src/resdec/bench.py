"""Decode-loop overhead benchmark over a replayed trace.

Measures wall time per token for two loops over the same replay source:

* plain greedy: densify the stored record and take the argmax;
* full residual decoding: the complete per-step pipeline.

Both loops share identical transport work (record densification), so their
ratio isolates what the residual machinery adds on top of a bare greedy
pass over the same data.  The report also carries isolated per-stage means
measured by re-running each pipeline stage on live window state, so the
overhead's composition is visible rather than a single opaque number.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from resdec.engine import DecodeConfig, Decoder
from resdec.errors import ConfigError
from resdec.logitmath import log_softmax
from resdec.pooling import aggregation_window, candidate_pool, jsd_curve, locate_valley
from resdec.records import record_from_dense
from resdec.residual import residual_logits
from resdec.sampling import apply_mask, fuse, plausibility_mask, sample, step_rng
from resdec.sources import ReplaySource
from resdec.traceio import Trace, TraceHeader

__all__ = ["BenchReport", "build_bench_trace", "run_bench"]


@dataclass(frozen=True)
class BenchReport:
    """Per-token wall times (microseconds) and their ratio."""

    n_tokens: int
    repetitions: int
    warmup: int
    vocab_size: int
    plain_us_per_token: float
    resdec_us_per_token: float
    ratio: float
    stage_means_us: dict[str, float]

    def rows(self) -> list[tuple[str, float]]:
        out = [
            ("plain_us_per_token", self.plain_us_per_token),
            ("resdec_us_per_token", self.resdec_us_per_token),
            ("ratio", self.ratio),
        ]
        out.extend((f"stage_{name}_us", value) for name, value in self.stage_means_us.items())
        return out


def build_bench_trace(
    vocab_size: int = 32768, n_tokens: int = 512, top_m: int = 1024, seed: int = 0
) -> Trace:
    """Random replayable trace at benchmark scale (stored entries only)."""
    if n_tokens < 2:
        raise ConfigError("n_tokens must be >= 2")
    rng = np.random.default_rng(seed)
    records = []
    for step in range(1, n_tokens + 1):
        dense = log_softmax(rng.normal(0.0, 2.0, size=vocab_size))
        records.append(
            record_from_dense(
                step, "generated", dense, top_m, chosen_token=int(np.argmax(dense))
            )
        )
    header = TraceHeader(
        vocab_size=vocab_size, top_m=top_m, label=None, answer_step=None, source="bench:random"
    )
    return Trace(header=header, records=records)


def _time_plain_loop(trace: Trace) -> float:
    """Seconds per token for densify + argmax over the replayed records."""
    source = ReplaySource(trace)
    n = 0
    start = time.perf_counter()
    prev = None
    while True:
        delivery = source.next_logits(prev)
        if delivery is None:
            break
        prev = int(np.argmax(delivery.logits))
        n += 1
    elapsed = time.perf_counter() - start
    return elapsed / max(n, 1)


def _time_resdec_loop(trace: Trace, cfg: DecodeConfig) -> float:
    """Seconds per token for densify + the full decode step."""
    source = ReplaySource(trace)
    decoder = Decoder(cfg)
    for record in source.prefill_records():
        decoder.push_prefill(record)
    n = 0
    start = time.perf_counter()
    prev = None
    while True:
        delivery = source.next_logits(prev)
        if delivery is None:
            break
        outcome = decoder.step(delivery.logits)
        prev = outcome.chosen
        n += 1
    elapsed = time.perf_counter() - start
    return elapsed / max(n, 1)


def _stage_means(trace: Trace, cfg: DecodeConfig, sample_every: int = 16) -> dict[str, float]:
    """Mean per-stage microseconds, re-measured on live window state.

    Mirrors the decode step's stage sequence by calling the same library
    functions outside the engine, timing each on every ``sample_every``-th
    step once enough history exists.  The sum can drift slightly from the
    end-to-end loop (this path re-does work the engine does once), so these
    numbers explain composition, not the headline ratio.
    """
    source = ReplaySource(trace)
    decoder = Decoder(cfg)
    sums: dict[str, float] = {}
    counts = 0
    prev = None
    step = 0
    while True:
        delivery = source.next_logits(prev)
        if delivery is None:
            break
        step += 1
        raw = delivery.logits
        measure = step % sample_every == 0 and decoder.history.newest_step is not None
        if measure:
            marks = [("normalize", time.perf_counter())]
            cur = log_softmax(raw)
            marks.append(("pool", time.perf_counter()))
            pool = candidate_pool(cur, cfg.pool_k)
            marks.append(("segment", time.perf_counter()))
            window = decoder.history.window(step, cfg.window_w)
            if len(window) >= 3:
                curve = jsd_curve(window, pool)
                valley = locate_valley(curve)
                aggregation_window(window, valley, curve=curve, smoothed=curve.size >= 3)
                delta = window[valley:]
            else:
                delta = window
            marks.append(("residual", time.perf_counter()))
            residual = residual_logits(
                delta,
                pool,
                aggregation=cfg.aggregation,
                confidence_mode=cfg.confidence_mode,
                current_step=step,
                top_n=cfg.top_n,
            )
            marks.append(("fuse_mask_sample", time.perf_counter()))
            fused = fuse(cur, residual, cfg.alpha)
            v_head = plausibility_mask(cur, cfg.beta)
            masked = apply_mask(fused, v_head)
            sample(masked, cfg.strategy, step_rng(cfg.seed, step))
            marks.append(("end", time.perf_counter()))
            for (name, t0), (_, t1) in zip(marks, marks[1:]):
                sums[name] = sums.get(name, 0.0) + (t1 - t0)
            counts += 1
        outcome = decoder.step(raw, step_index=step)
        prev = outcome.chosen
    if counts == 0:
        return {}
    return {name: 1e6 * total / counts for name, total in sums.items()}


def run_bench(
    trace: Trace, cfg: DecodeConfig, repetitions: int = 3, warmup: int = 1
) -> BenchReport:
    """Benchmark both loops over ``trace``; warmup repetitions are discarded."""
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if warmup < 0:
        raise ConfigError("warmup must be >= 0")
    for _ in range(warmup):
        _time_plain_loop(trace)
        _time_resdec_loop(trace, cfg)
    plain = min(_time_plain_loop(trace) for _ in range(repetitions))
    resdec = min(_time_resdec_loop(trace, cfg) for _ in range(repetitions))
    stage_means = _stage_means(trace, cfg)
    return BenchReport(
        n_tokens=len(trace.generated_records()),
        repetitions=repetitions,
        warmup=warmup,
        vocab_size=trace.vocab_size,
        plain_us_per_token=1e6 * plain,
        resdec_us_per_token=1e6 * resdec,
        ratio=resdec / plain if plain > 0 else float("inf"),
        stage_means_us=stage_means,
    )
