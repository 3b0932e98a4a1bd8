"""Causal-LM wrapper: load a local checkpoint and step it one token at a time.

Every emitted distribution is the log-softmax of one logit row over the full
vocabulary, truncated to the `top_m` largest entries and ordered by
(logprob descending, token id ascending). The log-sum-exp of an emitted
slice therefore never exceeds zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from resdec_adapter.config import AdapterConfig
from resdec_adapter.errors import ConfigError, ModelError, SessionError


@dataclass(frozen=True)
class TopSlice:
    """The kept portion of one next-token distribution.

    `token_ids`/`logprobs` are parallel arrays ordered by (logprob
    descending, id ascending); `eos` is set when the row's argmax is the
    model's end token; `vocab_size` is the full row width.
    """

    token_ids: np.ndarray
    logprobs: np.ndarray
    eos: bool
    vocab_size: int


def top_slice(row: np.ndarray, top_m: int, eos_token_id: int | None) -> TopSlice:
    """Normalize one logit row and keep its `top_m` largest entries."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.size == 0:
        raise SessionError("model produced an empty logit row")
    if not np.all(np.isfinite(row)):
        raise SessionError("model produced non-finite logits")
    shifted = row - np.max(row)
    logprobs = shifted - np.log(np.sum(np.exp(shifted)))
    order = np.lexsort((np.arange(row.size), -logprobs))
    keep = order[: min(top_m, row.size)]
    eos = eos_token_id is not None and int(order[0]) == int(eos_token_id)
    return TopSlice(
        token_ids=keep.astype(np.int64),
        logprobs=logprobs[keep],
        eos=bool(eos),
        vocab_size=int(row.size),
    )


def load_model(config: AdapterConfig):
    """Load a local checkpoint in eval mode on the configured device."""
    # Pulling in the model zoo is slow, so defer it to first use and keep
    # its progress bars off the wire.
    try:
        from transformers import AutoModelForCausalLM
        from transformers.utils import logging as hf_logging
    except Exception as exc:  # pragma: no cover - transformers is a hard dep
        raise ModelError(f"transformers is unavailable: {exc}") from exc
    hf_logging.set_verbosity_error()
    try:
        hf_logging.disable_progress_bar()
    except Exception:  # pragma: no cover - older releases lack the helper
        pass
    try:
        model = AutoModelForCausalLM.from_pretrained(config.model)
        model.eval()
        model.to(config.device)
    except Exception as exc:
        raise ModelError(f"cannot load model from {config.model!r}: {exc}") from exc
    return model


class ModelSession:
    """One decoding session over a loaded causal LM.

    `reset` ingests a prompt and returns slices for its trailing positions
    (the last one is the distribution the first new token is drawn from);
    `step` feeds one token and returns the next distribution. A KV cache
    carries the session forward; once the context limit would be exceeded
    the session re-ingests the trailing `max_context` tokens instead
    (sliding window).
    """

    def __init__(self, model, top_m: int, max_context: int = 0, device: str = "cpu"):
        if top_m < 1:
            raise ConfigError(f"top_m must be >= 1, got {top_m}")
        self.model = model
        self.device = device
        self.vocab_size = int(model.config.vocab_size)
        eos = getattr(model.config, "eos_token_id", None)
        self.eos_token_id = None if eos is None else int(eos)
        limit = int(
            getattr(model.config, "n_positions", 0)
            or getattr(model.config, "max_position_embeddings", 0)
            or 0
        )
        self.max_context = limit if max_context <= 0 else min(max_context, limit or max_context)
        if self.max_context and self.max_context < 2:
            raise ConfigError("max_context must allow at least two positions")
        self.top_m = int(top_m)
        self._past = None
        self._ids: list[int] = []

    def reset(self, prompt, keep_rows: int = 1) -> list[TopSlice]:
        """Start a fresh session from `prompt`; return slices for its last
        `keep_rows` positions (at least the final one)."""
        ids = self._validate_prompt(prompt)
        if self.max_context:
            ids = ids[-self.max_context :]
        self._ids = ids
        self._past = None
        rows = self._forward(ids)
        take = min(max(1, int(keep_rows)), rows.shape[0])
        return [
            top_slice(rows[r], self.top_m, self.eos_token_id)
            for r in range(rows.shape[0] - take, rows.shape[0])
        ]

    def step(self, token) -> TopSlice:
        """Feed one token and return the distribution for the next one."""
        if not self._ids:
            raise SessionError("step before reset")
        t = self._validate_token(token, what="feed")
        self._ids.append(t)
        if self.max_context and len(self._ids) > self.max_context:
            self._ids = self._ids[-self.max_context :]
            self._past = None
            rows = self._forward(self._ids)
        else:
            rows = self._forward([t])
        return top_slice(rows[-1], self.top_m, self.eos_token_id)

    def _forward(self, ids: list[int]) -> np.ndarray:
        input_ids = torch.tensor([ids], dtype=torch.long, device=self.device)
        try:
            with torch.no_grad():
                out = self.model(
                    input_ids=input_ids, past_key_values=self._past, use_cache=True
                )
        except Exception as exc:
            raise ModelError(f"model forward pass failed: {exc}") from exc
        self._past = out.past_key_values
        return out.logits[0].to(torch.float64).cpu().numpy()

    def _validate_token(self, token, what: str) -> int:
        if isinstance(token, bool) or not isinstance(token, (int, np.integer)):
            raise SessionError(f"{what} token must be an integer")
        t = int(token)
        if not 0 <= t < self.vocab_size:
            raise SessionError(
                f"{what} token {t} outside the vocabulary [0, {self.vocab_size})"
            )
        return t

    def _validate_prompt(self, prompt) -> list[int]:
        if not isinstance(prompt, (list, tuple)) or len(prompt) == 0:
            raise SessionError("prompt must be a non-empty token list")
        return [self._validate_token(t, what="prompt") for t in prompt]
