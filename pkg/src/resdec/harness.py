"""Trial runners and ablation sweeps over synthetic task traces.

This is the Python API underneath the CLI's ``simulate`` and ``sweep``
subcommands: generate a fixture trace per trial seed, decode it twice (full
residual decoding and the plain masked baseline sharing the same per-step
random streams), and score both against the trace label.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from resdec.engine import DecodeConfig, decode, regular_decode
from resdec.errors import ConfigError
from resdec.sources import ReplaySource
from resdec.synthetic import (
    SyntheticTaskSpec,
    generate_mixture_trace,
    generate_preservation_trace,
    generate_stress_trace,
    generate_trace,
)

__all__ = [
    "TrialRow",
    "SweepRow",
    "TRACE_KINDS",
    "make_trace",
    "run_trials",
    "trial_accuracies",
    "sweep_rows",
]

TRACE_KINDS = ("default", "stress", "preservation", "mixture")


@dataclass(frozen=True)
class TrialRow:
    """Outcome of one trial: both decoders' answer-step choices vs. the label."""

    trial: int
    seed: int
    label: int
    resdec_token: int
    regular_token: int
    resdec_correct: bool
    regular_correct: bool
    flips: int


@dataclass(frozen=True)
class SweepRow:
    """One (configuration, metric) cell of an ablation sweep."""

    alpha: float
    beta: float
    pool_k: int
    window_w: int
    strategy: str
    metric: str
    value: float


def make_trace(spec: SyntheticTaskSpec, seed: int, kind: str = "default"):
    """Build the fixture trace of the requested kind for one trial seed."""
    if kind == "default":
        return generate_trace(spec, seed)
    if kind == "stress":
        return generate_stress_trace(spec, seed)
    if kind == "preservation":
        return generate_preservation_trace(spec, seed)
    if kind == "mixture":
        return generate_mixture_trace(spec, seed)
    raise ConfigError(f"unknown trace kind {kind!r}; expected one of {TRACE_KINDS}")


def run_trials(
    spec: SyntheticTaskSpec,
    n: int,
    cfg: DecodeConfig,
    *,
    kind: str = "default",
    base_seed: int | None = None,
    trace_factory=None,
) -> list[TrialRow]:
    """Decode ``n`` fixture traces and score the answer-step choice of each.

    Trial ``i`` uses trace seed ``base_seed + i`` (``base_seed`` defaults to
    the decode config's seed) and a decode config whose sampling seed is the
    same trial seed, so stochastic strategies draw fresh but reproducible
    streams per trial.  ``trace_factory(spec, seed)`` overrides ``kind`` when
    given.
    """
    if n < 0:
        raise ConfigError("n must be nonnegative")
    if base_seed is None:
        base_seed = cfg.seed
    rows: list[TrialRow] = []
    for trial in range(n):
        seed = base_seed + trial
        trace = trace_factory(spec, seed) if trace_factory else make_trace(spec, seed, kind)
        trial_cfg = replace(cfg, seed=seed, max_new_tokens=max(cfg.max_new_tokens, trace.answer_step))
        answer_index = trace.answer_step - 1
        res = decode(ReplaySource(trace), trial_cfg)
        reg = regular_decode(ReplaySource(trace), trial_cfg)
        resdec_token = res.tokens[answer_index]
        regular_token = reg.tokens[answer_index]
        rows.append(
            TrialRow(
                trial=trial,
                seed=seed,
                label=trace.label,
                resdec_token=resdec_token,
                regular_token=regular_token,
                resdec_correct=resdec_token == trace.label,
                regular_correct=regular_token == trace.label,
                flips=res.flips,
            )
        )
    return rows


def trial_accuracies(rows: list[TrialRow]) -> tuple[float, float]:
    """(residual-decoding accuracy, regular-baseline accuracy) over trials."""
    if not rows:
        return (0.0, 0.0)
    res = float(np.mean([r.resdec_correct for r in rows]))
    reg = float(np.mean([r.regular_correct for r in rows]))
    return (res, reg)


# Sweep metrics: mixture-fixture accuracy probes helpfulness on a random
# blend of correction and preservation cases; stress-fixture accuracy probes
# the plausibility gate against a stale-history trap.
_SWEEP_METRIC_KINDS = (("accuracy_random", "mixture"), ("accuracy_stress", "stress"))


def sweep_rows(
    spec: SyntheticTaskSpec,
    *,
    alphas=(0.5,),
    betas=(0.1,),
    pool_sizes=(256,),
    windows=(8,),
    strategies=("greedy",),
    n: int = 50,
    seed: int = 0,
    top_m: int = 1024,
) -> list[SweepRow]:
    """One row per configuration per metric, in deterministic grid order.

    The grid iterates alphas, betas, pool sizes, windows, strategies in that
    nesting order; within a configuration the metrics appear alphabetically.
    Every configuration scores the same trial seeds (``seed .. seed+n-1``).
    """
    rows: list[SweepRow] = []
    for alpha, beta, pool_k, window_w, strategy in product(
        alphas, betas, pool_sizes, windows, strategies
    ):
        cfg = DecodeConfig(
            alpha=float(alpha),
            beta=float(beta),
            pool_k=int(pool_k),
            window_w=int(window_w),
            strategy=str(strategy),
            top_m=max(top_m, int(pool_k)),
            seed=seed,
        )
        for metric, kind in _SWEEP_METRIC_KINDS:
            trials = run_trials(spec, n, cfg, kind=kind, base_seed=seed)
            accuracy, _ = trial_accuracies(trials)
            rows.append(
                SweepRow(
                    alpha=float(alpha),
                    beta=float(beta),
                    pool_k=int(pool_k),
                    window_w=int(window_w),
                    strategy=str(strategy),
                    metric=metric,
                    value=accuracy,
                )
            )
    return rows
