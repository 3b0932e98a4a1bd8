"""Adapter configuration: which checkpoint to load and how replies are shaped."""

from __future__ import annotations

from dataclasses import dataclass

from resdec_adapter.errors import ConfigError


@dataclass(frozen=True)
class AdapterConfig:
    """Where the checkpoint lives and how much of each distribution to emit.

    `model` is a local checkpoint directory (anything the causal-LM
    auto-loader accepts). `top_m` caps how many (token id, logprob) pairs a
    reply or trace record carries. `device` is a torch device string.
    `max_context` limits how many positions the session keeps; 0 defers to
    the checkpoint's own position limit.
    """

    model: str
    top_m: int = 64
    device: str = "cpu"
    max_context: int = 0

    def __post_init__(self) -> None:
        if not self.model:
            raise ConfigError("model must be a non-empty checkpoint path")
        if self.top_m < 1:
            raise ConfigError(f"top_m must be >= 1, got {self.top_m}")
        if not self.device:
            raise ConfigError("device must be non-empty")
        if self.max_context < 0:
            raise ConfigError(f"max_context must be >= 0, got {self.max_context}")
