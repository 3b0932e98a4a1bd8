"""Write the model's own greedy continuation as a replayable trace file.

The file is JSON lines: a header, then one record per step. The last
`window_w` prompt positions appear first with origin "prefill" (step 0 is
the final prompt position; its distribution is also the one the first
generated token is drawn from). Generated records follow with origin "gen",
step indices 1..steps, and `chosen` set to the argmax. Output is
deterministic for a fixed checkpoint, prompt, and step budget.
"""

from __future__ import annotations

import json
from pathlib import Path

from resdec_adapter.config import AdapterConfig
from resdec_adapter.errors import ConfigError
from resdec_adapter.model import ModelSession, TopSlice, load_model

TRACE_FORMAT = "resdec-trace/1"
_COMPACT = (",", ":")


def _record_line(step: int, origin: str, sl: TopSlice, chosen: int | None) -> str:
    return json.dumps(
        {
            "step": step,
            "origin": origin,
            "topk": [[int(i), float(v)] for i, v in zip(sl.token_ids, sl.logprobs)],
            "chosen": chosen,
        },
        separators=_COMPACT,
        ensure_ascii=False,
    )


def dump_trace(config: AdapterConfig, prompt, steps: int, out_path, window_w: int = 8) -> None:
    """Greedy-decode up to `steps` tokens from `prompt` and write the trace.

    Stops early after recording a step whose argmax is the model's end
    token. `window_w` controls how many trailing prompt positions are
    recorded as prefill context.
    """
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    if window_w < 1:
        raise ConfigError(f"window_w must be >= 1, got {window_w}")
    model = load_model(config)
    session = ModelSession(
        model, top_m=config.top_m, max_context=config.max_context, device=config.device
    )
    slices = session.reset(prompt, keep_rows=min(window_w, len(prompt)))

    header = {
        "format": TRACE_FORMAT,
        "vocab_size": session.vocab_size,
        "top_m": session.top_m,
        "label": None,
        "answer_step": None,
        "source": f"adapter:{Path(config.model).name}",
    }
    lines = [json.dumps(header, separators=_COMPACT, ensure_ascii=False)]

    n = len(prompt)
    base = n - len(slices)
    for k, sl in enumerate(slices):
        position = base + k
        chosen = int(prompt[position + 1]) if position + 1 < n else None
        lines.append(_record_line(position - (n - 1), "prefill", sl, chosen))

    current = slices[-1]
    for step in range(1, steps + 1):
        chosen = int(current.token_ids[0])
        lines.append(_record_line(step, "gen", current, chosen))
        if current.eos or step == steps:
            break
        current = session.step(chosen)

    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
