"""Deterministic synthetic traces reproducing the guided-then-injected
hallucination failure mode, plus fixture variants for ablation studies.

Template layout over a guide of G steps (answer at step G+1):
  - steps 1..ceil(G/2): high churn — alternating halves of the background
    vocabulary get a large boost, and the answer/hallucination margin ramps
    from negative (hallucination ahead) to positive (answer ahead);
  - remaining guide steps are quiet: the answer holds a fixed margin over
    the hallucination token while one "expressive" token rises late (so the
    divergence curve turns back up at the end);
  - the answer step boosts the hallucination token above the answer, which
    flips plain greedy but not the history-fused pipeline.

Noise is bounded (clipped at two sigma) and applied to background tokens
only; decision-token margins are exact template values, which makes the
correction guarantee deterministic rather than probabilistic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from resdec.errors import SpecError
from resdec.logitmath import log_softmax
from resdec.records import ORIGIN_GENERATED, record_from_dense
from resdec.traceio import Trace, TraceHeader

# Stream namespaces for per-purpose RNG derivation.
_NS_NOISE = 11
_NS_CHURN = 13
_NS_MIXTURE = 17

# Late-guide rise of the expressive token, as a fraction of sap_margin.
_EXPRESSIVE_RISE = 0.8
# Expressive-token level at the answer step, as a fraction of sap_margin.
_EXPRESSIVE_FINAL = 1.0 / 3.0


@dataclass
class SyntheticTaskSpec:
    """Parameters of the synthetic guided-answer task."""

    vocab_size: int = 16
    answer_token: int = 1
    hallucination_token: int = 2
    guide_len: int = 8
    sap_margin: float = 3.0
    injection_delta: float = 2.0
    noise_sigma: float = 0.1
    psap_churn: float = 2.0

    def validate(self, enforce_invariants: bool = True) -> None:
        if self.vocab_size < 8:
            raise SpecError("vocab_size must be >= 8")
        for tok in (self.answer_token, self.hallucination_token):
            if not 0 <= tok < self.vocab_size:
                raise SpecError(f"token id {tok} outside vocab")
        if self.answer_token == self.hallucination_token:
            raise SpecError("answer and hallucination tokens must differ")
        if self.guide_len < 2:
            raise SpecError("guide_len must be >= 2")
        if self.sap_margin <= 0:
            raise SpecError("sap_margin must be positive")
        if self.injection_delta < 0:
            raise SpecError("injection_delta must be nonnegative")
        if self.noise_sigma < 0 or self.psap_churn < 0:
            raise SpecError("noise_sigma and psap_churn must be nonnegative")
        if enforce_invariants:
            # The by-construction correction envelope: at the default even
            # blend, correction needs delta < margin; the noise bound keeps
            # randomized background mass away from decision margins.
            if not self.injection_delta < self.sap_margin:
                raise SpecError("injection_delta must be < sap_margin")
            if not self.noise_sigma < 0.25 * (self.sap_margin - self.injection_delta):
                raise SpecError("noise_sigma must be < 0.25*(sap_margin - injection_delta)")


def trace_top_m(spec: SyntheticTaskSpec) -> int:
    """Record truncation for simulator traces: three quarters of the
    vocabulary, so replay exercises the missing-token fill path."""
    return max(4, (3 * spec.vocab_size) // 4)


def _special_tokens(spec: SyntheticTaskSpec) -> tuple[int, int, list[int]]:
    """(expressive, stale, background) token assignment."""
    taken = {spec.answer_token, spec.hallucination_token}
    free = [i for i in range(spec.vocab_size) if i not in taken]
    expressive, stale = free[0], free[1]
    background = free[2:]
    return expressive, stale, background


def _build_trace(
    spec: SyntheticTaskSpec,
    seed: int,
    *,
    source: str,
    injection_delta: float,
    stale_quiet: float | None = None,
    stale_final: float | None = None,
    final_hallucination: float | None = None,
    enforce_invariants: bool = True,
) -> Trace:
    spec.validate(enforce_invariants=enforce_invariants)
    if seed < 0:
        raise SpecError("seed must be nonnegative")
    a, h = spec.answer_token, spec.hallucination_token
    expressive, stale, background = _special_tokens(spec)
    m = spec.sap_margin
    psap_len = ceil(spec.guide_len / 2)
    quiet_steps = list(range(psap_len + 1, spec.guide_len + 1))
    answer_step = spec.guide_len + 1
    top_m = trace_top_m(spec)

    noise_rng = np.random.default_rng((seed, _NS_NOISE))
    churn_rng = np.random.default_rng((seed, _NS_CHURN))
    perm = churn_rng.permutation(np.array(background, dtype=np.int64))
    halves = (perm[: len(perm) // 2], perm[len(perm) // 2 :])

    records = []
    for step in range(1, answer_step + 1):
        noise = noise_rng.normal(0.0, spec.noise_sigma, size=spec.vocab_size)
        bound = 2.0 * spec.noise_sigma
        raw = np.clip(noise, -bound, bound)
        # Decision tokens take exact template values.
        if step <= psap_len:
            margin_s = m * (2 * step - psap_len - 1) / psap_len
            raw[a] = m / 2 + margin_s / 2
            raw[h] = m / 2 - margin_s / 2
            raw[halves[step % 2]] += spec.psap_churn
        elif step <= spec.guide_len:
            raw[a] = m
            raw[h] = 0.0
            if len(quiet_steps) >= 3:
                if step == quiet_steps[-2]:
                    raw[expressive] = 0.5 * _EXPRESSIVE_RISE * m
                elif step == quiet_steps[-1]:
                    raw[expressive] = _EXPRESSIVE_RISE * m
            if stale_quiet is not None:
                raw[stale] = m + stale_quiet
        else:
            raw[a] = m
            raw[h] = m + injection_delta if final_hallucination is None else final_hallucination
            raw[expressive] = _EXPRESSIVE_FINAL * m
            if stale_final is not None:
                raw[stale] = m - stale_final
        logprobs = log_softmax(raw)
        records.append(
            record_from_dense(
                step,
                ORIGIN_GENERATED,
                logprobs,
                top_m,
                chosen_token=int(np.argmax(raw)),
            )
        )

    header = TraceHeader(
        vocab_size=spec.vocab_size,
        top_m=top_m,
        label=a,
        answer_step=answer_step,
        source=source,
    )
    return Trace(header=header, records=records)


def generate_trace(
    spec: SyntheticTaskSpec, seed: int, *, enforce_invariants: bool = True
) -> Trace:
    """The default correction trace: guided answer, injected hallucination.

    Plain greedy at the answer step picks the hallucination token (boosted
    `injection_delta` above the answer); the history-fused pipeline at even
    blend recovers the answer whenever injection_delta < sap_margin.
    """
    return _build_trace(
        spec,
        seed,
        source="simulator:default",
        injection_delta=spec.injection_delta,
        enforce_invariants=enforce_invariants,
    )


def generate_stress_trace(
    spec: SyntheticTaskSpec,
    seed: int,
    *,
    stale_margin: float = 4.0,
    stale_gap: float = 2.5,
) -> Trace:
    """Mask-stress fixture: a stale guide token dominates quiet history
    (answer + stale_margin) but is implausible at the answer step
    (answer - stale_gap, below the default plausibility cut). With the
    gate off (beta=0) the residual resurrects it; with beta=0.1 the gate
    holds and the answer wins."""
    if stale_gap <= 0 or stale_margin <= stale_gap:
        raise SpecError("need stale_margin > stale_gap > 0 for the stress construction")
    return _build_trace(
        spec,
        seed,
        source="simulator:stress",
        injection_delta=spec.injection_delta,
        stale_quiet=stale_margin,
        stale_final=stale_gap,
    )


def generate_preservation_trace(
    spec: SyntheticTaskSpec,
    seed: int,
    *,
    trap_gap: float = 1.7,
    trap_residual: float = 1.05,
) -> Trace:
    """Preservation fixture: current evidence is right (answer on top, no
    injection) while a plausible trap token carries a moderate residual
    advantage. The trap fires exactly when alpha/(1-alpha) exceeds
    trap_gap/trap_residual — wrong at alpha in {0.75, 1.0}, right at
    {0.25, 0.5} with the defaults here."""
    if trap_gap <= 0 or trap_residual <= 0:
        raise SpecError("trap_gap and trap_residual must be positive")
    return _build_trace(
        spec,
        seed,
        source="simulator:preservation",
        injection_delta=0.0,
        stale_quiet=trap_residual,
        stale_final=trap_gap,
        final_hallucination=0.0,
    )


def generate_mixture_trace(
    spec: SyntheticTaskSpec,
    seed: int,
    *,
    preservation_fraction: float = 0.6,
    delta_low: float = 0.5,
    delta_high: float = 0.7,
) -> Trace:
    """Randomized mixture used for blend-weight ablations: preservation
    traces punish over-reliance on history, correction traces (injection
    drawn in [delta_low, delta_high] * margin) reward it. Mid-range blends
    win on both; extremes each lose one side.

    delta_high * sap_margin must stay below -ln(beta) for the evaluation's
    plausibility gate (2.303 nats at beta=0.1), otherwise the answer token
    itself is gated out and no blend can recover it.
    """
    if not 0.0 <= preservation_fraction <= 1.0:
        raise SpecError("preservation_fraction must be in [0, 1]")
    if not 0.0 <= delta_low <= delta_high < 1.0:
        raise SpecError("need 0 <= delta_low <= delta_high < 1")
    rng = np.random.default_rng((seed, _NS_MIXTURE))
    if rng.random() < preservation_fraction:
        trace = generate_preservation_trace(spec, seed)
        trace.header.source = "simulator:mixture:preservation"
        return trace
    delta = spec.sap_margin * rng.uniform(delta_low, delta_high)
    draw_spec = SyntheticTaskSpec(
        vocab_size=spec.vocab_size,
        answer_token=spec.answer_token,
        hallucination_token=spec.hallucination_token,
        guide_len=spec.guide_len,
        sap_margin=spec.sap_margin,
        injection_delta=float(delta),
        noise_sigma=spec.noise_sigma,
        psap_churn=spec.psap_churn,
    )
    trace = _build_trace(
        draw_spec,
        seed,
        source="simulator:mixture:correction",
        injection_delta=float(delta),
        enforce_invariants=False,
    )
    return trace
