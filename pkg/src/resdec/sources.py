"""Logit sources the decode loop can drive.

A source exposes `vocab_size`, `prefill_records()` (possibly empty),
`next_logits(prev_token) -> Delivery | None` (None = exhausted), and
`close()`. Replay walks a recorded trace, Markov is a tiny closed-loop
table model for end-to-end demos, and Stdio speaks the line protocol to a
backend subprocess.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass

import numpy as np

from resdec.errors import ParseError, SpecError
from resdec.protocol import parse_reply, request_close, request_reset, request_step
from resdec.records import ORIGIN_PREFILL, StepRecord, record_from_dense
from resdec.traceio import Trace


@dataclass
class Delivery:
    """One step's raw logits plus the backend's end-of-sequence flag."""

    logits: np.ndarray
    eos: bool = False


class ReplaySource:
    """Replays a trace's generated records as dense logit vectors.

    Tokens a record did not retain are reconstructed at floor - 1.0 (the
    same fill rule history lookups use), keeping the replayed distribution
    finite everywhere.
    """

    def __init__(self, trace: Trace):
        self.trace = trace
        self.vocab_size = trace.vocab_size
        self._gen = trace.generated_records()
        self._pos = 0

    def prefill_records(self) -> list[StepRecord]:
        return self.trace.prefill_records()

    def next_logits(self, prev_token: int | None) -> Delivery | None:
        if self._pos >= len(self._gen):
            return None
        rec = self._gen[self._pos]
        self._pos += 1
        return Delivery(logits=rec.dense_logits(self.vocab_size))

    def reset(self) -> None:
        self._pos = 0

    def close(self) -> None:
        pass


class MarkovSource:
    """Closed-loop table model: next logits = log of the row of the last
    token. Deterministic; prompt rows become prefill records."""

    def __init__(self, table: np.ndarray, prompt: list[int], top_m: int = 1024):
        t = np.asarray(table, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise SpecError("transition table must be square")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise SpecError("transition rows must be finite and nonnegative")
        if np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
            raise SpecError("transition rows must sum to 1")
        if not prompt:
            raise SpecError("markov source needs a non-empty prompt")
        if any(not 0 <= p < t.shape[0] for p in prompt):
            raise SpecError("prompt token outside the table")
        self.table = t
        self.vocab_size = t.shape[0]
        self.prompt = [int(p) for p in prompt]
        self.top_m = top_m

    def _row_logprobs(self, token: int) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.table[token])

    def prefill_records(self) -> list[StepRecord]:
        out = []
        offset = len(self.prompt) - 1
        for i, tok in enumerate(self.prompt):
            out.append(
                record_from_dense(
                    i - offset,
                    ORIGIN_PREFILL,
                    self._row_logprobs(tok),
                    self.top_m,
                    chosen_token=self.prompt[i + 1] if i + 1 < len(self.prompt) else None,
                )
            )
        return out

    def next_logits(self, prev_token: int | None) -> Delivery | None:
        context = self.prompt[-1] if prev_token is None else int(prev_token)
        return Delivery(logits=self._row_logprobs(context))

    def close(self) -> None:
        pass


def markov_source(table: np.ndarray, prompt: list[int], top_m: int = 1024) -> MarkovSource:
    """Factory matching the simulator module's naming."""
    return MarkovSource(table, prompt, top_m=top_m)


class StdioSource:
    """Client side of the step protocol over a subprocess's pipes.

    The vocabulary size comes from the backend's optional "vocab" reply
    field or the explicit parameter; absent both, the source errors.
    Delivered topk entries become a dense vector with -inf elsewhere (the
    engine renormalizes over the delivered support).
    """

    def __init__(self, argv: list[str], prompt: list[int], vocab_size: int | None = None):
        self.prompt = [int(p) for p in prompt]
        self.vocab_size = vocab_size
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def _roundtrip(self, line: str) -> tuple[np.ndarray, np.ndarray, bool, int | None]:
        if self._proc.poll() is not None:
            raise ParseError("backend exited before the request")
        assert self._proc.stdin is not None and self._proc.stdout is not None
        self._proc.stdin.write(line + "\n")
        self._proc.stdin.flush()
        reply = self._proc.stdout.readline()
        if reply == "":
            raise ParseError("backend closed its stream mid-session")
        return parse_reply(reply)

    def prefill_records(self) -> list[StepRecord]:
        # The live protocol carries no prompt-phase logits; the reset reply
        # is already the first generated step.
        return []

    def next_logits(self, prev_token: int | None) -> Delivery | None:
        if prev_token is None:
            ids, lps, eos, vocab = self._roundtrip(request_reset(self.prompt))
            if self.vocab_size is None:
                self.vocab_size = vocab
            if self.vocab_size is None:
                raise ParseError("backend did not report a vocab size and none was given")
        else:
            ids, lps, eos, _ = self._roundtrip(request_step(int(prev_token)))
        if np.any(ids >= self.vocab_size) or np.any(ids < 0):
            raise ParseError("backend token id outside the vocabulary")
        dense = np.full(self.vocab_size, -np.inf)
        dense[ids] = lps
        return Delivery(logits=dense, eos=eos)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                assert self._proc.stdin is not None
                self._proc.stdin.write(request_close() + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError):
                pass
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "StdioSource":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
