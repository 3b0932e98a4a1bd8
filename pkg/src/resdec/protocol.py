"""Engine-side framing for the step protocol.

One JSON object per line over a byte stream. Requests:
{"cmd":"reset","prompt":[int,...]} | {"cmd":"step","feed":int} |
{"cmd":"close"}. Replies: {"topk":[[id,logprob],...],"eos":bool}
(optionally with "vocab": int) or {"error": string}.
"""

from __future__ import annotations

import json

import numpy as np

from resdec.errors import ParseError


def request_reset(prompt: list[int]) -> str:
    return json.dumps({"cmd": "reset", "prompt": [int(t) for t in prompt]}, separators=(",", ":"))


def request_step(feed: int) -> str:
    return json.dumps({"cmd": "step", "feed": int(feed)}, separators=(",", ":"))


def request_close() -> str:
    return json.dumps({"cmd": "close"}, separators=(",", ":"))


def parse_reply(line: str) -> tuple[np.ndarray, np.ndarray, bool, int | None]:
    """Parse one backend reply into (ids, logprobs, eos, vocab)."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid protocol JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ParseError("protocol reply must be a JSON object")
    if "error" in obj:
        raise ParseError(f"backend error: {obj['error']}")
    if "topk" not in obj:
        raise ParseError("protocol reply missing 'topk'")
    try:
        ids = np.array([int(pair[0]) for pair in obj["topk"]], dtype=np.int64)
        lps = np.array([float(pair[1]) for pair in obj["topk"]], dtype=np.float64)
        eos = bool(obj.get("eos", False))
        vocab = None if obj.get("vocab") is None else int(obj["vocab"])
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed protocol reply ({exc!r})") from exc
    if ids.size == 0:
        raise ParseError("protocol reply has empty topk")
    return ids, lps, eos, vocab
