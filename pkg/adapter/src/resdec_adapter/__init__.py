"""Model adapter: serve a local causal LM over the stdio step protocol.

The package exposes two operations. `serve(config)` answers line-oriented
step requests on stdio, emitting top-M normalized next-token logprobs per
step. `dump_trace(config, prompt, steps, out_path)` runs the model's own
greedy continuation and writes it as a replayable trace file. Both work on
token ids; tokenization happens upstream.
"""

from resdec_adapter.config import AdapterConfig
from resdec_adapter.dump import dump_trace
from resdec_adapter.errors import (
    AdapterError,
    ConfigError,
    ModelError,
    ProtocolError,
    SessionError,
)
from resdec_adapter.serve import serve

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "ConfigError",
    "ModelError",
    "ProtocolError",
    "SessionError",
    "dump_trace",
    "serve",
    "__version__",
]
